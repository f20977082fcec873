#include <gtest/gtest.h>
TEST(Placeholder_test_transcription, Builds) { SUCCEED(); }
