#include <gtest/gtest.h>
TEST(Placeholder_test_cli, Builds) { SUCCEED(); }
