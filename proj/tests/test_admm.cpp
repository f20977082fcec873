#include <gtest/gtest.h>
TEST(Placeholder_test_admm, Builds) { SUCCEED(); }
