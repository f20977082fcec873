#include <gtest/gtest.h>
TEST(Placeholder_test_miqp, Builds) { SUCCEED(); }
