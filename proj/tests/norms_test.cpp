#include <catch2/catch_amalgamated.hpp>
TEST_CASE("placeholder norms_test") { CHECK(true); }
