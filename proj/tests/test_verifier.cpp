#include <gtest/gtest.h>
TEST(Placeholder_test_verifier, Builds) { SUCCEED(); }
