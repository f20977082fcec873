#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "patchplan/geometry.hpp"
#include "patchplan/model.hpp"

namespace patchplan {

/// Frictional limit surface of a circular patch under uniform pressure:
/// an ellipsoid in (shear force, torsion) scaled by the normal force.
struct FrictionLimitSurface {
  double mu = 0.0;     // friction coefficient
  double k = 0.0;      // torsion integration constant, 0.67 * r_p
  double f_max = 0.0;  // normal force cap
};

/// Box-shaped wrench set the micro-spines sustain at zero normal force.
struct SpineLimitSurface {
  double fx_max = 0.0;
  double fy_max = 0.0;
  double tz_max = 0.0;
};

/// Patch contact model: Minkowski sum of friction and spine surfaces.
struct PatchLimitSurface {
  FrictionLimitSurface friction;
  SpineLimitSurface spine;
};

inline PatchLimitSurface patch_surface_of(const GraspRegion& region) {
  PatchLimitSurface s;
  s.friction = {region.friction, region.torsion_constant,
                region.normal_force_max};
  s.spine = {region.spine_fx_max, region.spine_fy_max, region.spine_tz_max};
  return s;
}

/// Normalized ellipsoid value; <= 1 means inside. Returns +inf for nonzero
/// shear/torsion at zero normal force.
inline double friction_ellipse_value(const FrictionLimitSurface& s,
                                     const Vec3& force, double torsion) {
  const double shear2 = force.x() * force.x() + force.y() * force.y();
  const double denom = s.mu * force.z();
  if (denom <= 0.0) {
    return (shear2 == 0.0 && torsion == 0.0)
               ? 0.0
               : std::numeric_limits<double>::infinity();
  }
  return shear2 / (denom * denom) +
         (torsion * torsion) / (s.k * denom * s.k * denom);
}

inline bool friction_contains(const FrictionLimitSurface& s, const Wrench& w,
                              double tol = 1e-9) {
  if (std::abs(w.moment.x()) > tol || std::abs(w.moment.y()) > tol)
    return false;
  const double fz = w.force.z();
  if (fz < -tol || fz > s.f_max + tol) return false;
  if (fz <= tol) {
    // Degenerate slice: only the zero wrench.
    return std::abs(w.force.x()) <= tol && std::abs(w.force.y()) <= tol &&
           std::abs(w.moment.z()) <= tol;
  }
  return friction_ellipse_value(s, w.force, w.moment.z()) <= 1.0 + tol;
}

inline bool spine_contains(const SpineLimitSurface& s, const Wrench& w,
                           double tol = 1e-9) {
  return std::abs(w.force.x()) <= s.fx_max + tol &&
         std::abs(w.force.y()) <= s.fy_max + tol &&
         std::abs(w.force.z()) <= tol && std::abs(w.moment.x()) <= tol &&
         std::abs(w.moment.y()) <= tol &&
         std::abs(w.moment.z()) <= s.tz_max + tol;
}

/// Splits a total wrench into (friction, spine) parts. The spine part takes
/// as much shear/torsion as its box allows (componentwise clamp); since the
/// friction ellipsoid value is monotone in each |component|, this residual
/// is the feasibility-optimal decomposition.
inline std::array<Wrench, 2> decompose_patch_wrench(const PatchLimitSurface& s,
                                                    const Wrench& w) {
  const auto clamp = [](double v, double cap) {
    return std::clamp(v, -cap, cap);
  };
  Wrench spine;
  spine.frame = w.frame;
  spine.force.x() = clamp(w.force.x(), s.spine.fx_max);
  spine.force.y() = clamp(w.force.y(), s.spine.fy_max);
  spine.force.z() = 0.0;
  spine.moment.z() = clamp(w.moment.z(), s.spine.tz_max);
  Wrench friction;
  friction.frame = w.frame;
  friction.force = w.force - spine.force;
  friction.moment = w.moment - spine.moment;
  return {friction, spine};
}

inline bool patch_contains(const PatchLimitSurface& s, const Wrench& w,
                           double tol = 1e-9) {
  if (std::abs(w.moment.x()) > tol || std::abs(w.moment.y()) > tol)
    return false;
  const auto parts = decompose_patch_wrench(s, w);
  return friction_contains(s.friction, parts[0], tol);
}

/// Residual of the paired-finger coupling: shear forces and torsion of the
/// two patches of one gripper must be identical. Zero iff the coupling holds.
inline Vec3 couple_paired_fingers(const Wrench& w1, const Wrench& w2) {
  return Vec3(w1.force.x() - w2.force.x(), w1.force.y() - w2.force.y(),
              w1.moment.z() - w2.moment.z());
}

/// Local slots of the piecewise-linear friction family.
enum PatchSlot : int {
  kSlotFx = 0,
  kSlotFy,
  kSlotFz,
  kSlotMz,
  kSlotMzPlus,
  kSlotMzMinus,
  kSlotGamma,
  kPatchSlotCount
};

/// One row lower <= coeff . v <= upper over the PatchSlot ordering.
struct PatchRow {
  std::array<double, kPatchSlotCount> coeff{};
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Piecewise-linear inner representation of the friction ellipsoid using the
/// positive/negative torsion split and the direction binary gamma:
///   |f^i| <= mu f^z - m^z_+/k + shift_i      (i = x, y; both m_+ and m_-)
///   m^z = m^z_+ - m^z_-,  m^z_+/- >= 0,  |m^z| <= k mu f^z + shift_tz
///   gamma = 1 => m^z_- = 0,  gamma = 0 => m^z_+ = 0   (big-M)
/// Shifts default to zero (the exact family); the MIQP transcription sets
/// them to the spine caps to relax the family into an outer patch model.
struct LinearizedFrictionFamily {
  FrictionLimitSurface surface;
  double shift_fx = 0.0;
  double shift_fy = 0.0;
  double shift_tz = 0.0;
  double mz_big_m = 0.0;  // bound used by the gamma indicator rows

  std::vector<PatchRow> rows() const {
    const double mu = surface.mu;
    const double k = surface.k;
    std::vector<PatchRow> out;
    const auto shear_rows = [&](int slot, double shift) {
      for (int mslot : {kSlotMzPlus, kSlotMzMinus}) {
        for (double sign : {1.0, -1.0}) {
          PatchRow row;
          row.coeff[slot] = sign;
          row.coeff[kSlotFz] = -mu;
          row.coeff[mslot] = 1.0 / k;
          row.upper = shift;
          out.push_back(row);
        }
      }
    };
    shear_rows(kSlotFx, shift_fx);
    shear_rows(kSlotFy, shift_fy);
    {
      PatchRow split;  // m^z - m^z_+ + m^z_- = 0
      split.coeff[kSlotMz] = 1.0;
      split.coeff[kSlotMzPlus] = -1.0;
      split.coeff[kSlotMzMinus] = 1.0;
      split.lower = split.upper = 0.0;
      out.push_back(split);
    }
    for (int mslot : {kSlotMzPlus, kSlotMzMinus}) {
      PatchRow nonneg;
      nonneg.coeff[mslot] = 1.0;
      nonneg.lower = 0.0;
      out.push_back(nonneg);
    }
    for (double sign : {1.0, -1.0}) {
      PatchRow torsion;  // +-m^z - k mu f^z <= shift_tz
      torsion.coeff[kSlotMz] = sign;
      torsion.coeff[kSlotFz] = -k * mu;
      torsion.upper = shift_tz;
      out.push_back(torsion);
    }
    {
      PatchRow fz;  // 0 <= f^z <= f_max
      fz.coeff[kSlotFz] = 1.0;
      fz.lower = 0.0;
      fz.upper = surface.f_max;
      out.push_back(fz);
    }
    const double big_m = mz_big_m > 0.0 ? mz_big_m
                                        : k * mu * surface.f_max + shift_tz;
    {
      PatchRow minus;  // m^z_- <= M (1 - gamma)
      minus.coeff[kSlotMzMinus] = 1.0;
      minus.coeff[kSlotGamma] = big_m;
      minus.upper = big_m;
      out.push_back(minus);
    }
    {
      PatchRow plus;  // m^z_+ <= M gamma
      plus.coeff[kSlotMzPlus] = 1.0;
      plus.coeff[kSlotGamma] = -big_m;
      plus.upper = 0.0;
      out.push_back(plus);
    }
    return out;
  }

  bool feasible(const std::array<double, kPatchSlotCount>& v,
                double tol = 1e-9) const {
    for (const auto& row : rows()) {
      double acc = 0.0;
      for (int j = 0; j < kPatchSlotCount; ++j) acc += row.coeff[j] * v[j];
      if (acc < row.lower - tol || acc > row.upper + tol) return false;
    }
    return true;
  }
};

inline LinearizedFrictionFamily linearized_friction_constraints(
    const FrictionLimitSurface& s) {
  LinearizedFrictionFamily family;
  family.surface = s;
  return family;
}

}  // namespace patchplan
