#pragma once

#include "patchplan/admm.hpp"
#include "patchplan/consensus.hpp"
#include "patchplan/constraints.hpp"
#include "patchplan/contact.hpp"
#include "patchplan/geometry.hpp"
#include "patchplan/io.hpp"
#include "patchplan/layout.hpp"
#include "patchplan/miqp.hpp"
#include "patchplan/model.hpp"
#include "patchplan/nlp.hpp"
#include "patchplan/qp.hpp"
#include "patchplan/scenario_json.hpp"
#include "patchplan/selftest.hpp"
#include "patchplan/splits.hpp"
#include "patchplan/transcription.hpp"
#include "patchplan/verifier.hpp"
