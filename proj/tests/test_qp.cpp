#include <gtest/gtest.h>
TEST(Placeholder_test_qp, Builds) { SUCCEED(); }
