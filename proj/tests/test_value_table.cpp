#include <doctest.h>

#include "qdet/errors.hpp"
#include "qdet/value_table.hpp"

using namespace qdet;

TEST_CASE("value table evaluation modes") {
    ValueTable t({0.0, 1.0, 2.0, 3.0}, {-3.0, -2.0, -1.0, 0.0}, 3.0, TableInterp::PiecewiseLinear);
    CHECK(t(0.5) == doctest::Approx(-2.5));
    CHECK(t(1.0) == doctest::Approx(-2.0));
    CHECK(t(2.999) == doctest::Approx(-0.001).epsilon(1e-9));
    CHECK(t(3.0) == 0.0);   // exactly zero at and beyond the threshold
    CHECK(t(100.0) == 0.0);
    CHECK(t(-1.0) == doctest::Approx(-3.0));

    t.interp = TableInterp::PiecewiseConstant;
    CHECK(t(0.5) == doctest::Approx(-3.0));  // left-node value on the cell
    CHECK(t(1.0) == doctest::Approx(-2.0));
    CHECK(t(2.999) == doctest::Approx(-1.0));
    CHECK(t(3.0) == 0.0);
}

TEST_CASE("value table validation") {
    CHECK_THROWS_AS(ValueTable({0.0, 0.0}, {1.0, 2.0}, 1.0), ConfigError);
    CHECK_THROWS_AS(ValueTable({0.0}, {1.0}, 1.0), ConfigError);
    CHECK_THROWS_AS(ValueTable::uniform(0.0, 5), ConfigError);
}

TEST_CASE("uniform builder lands exactly on the threshold") {
    ValueTable t = ValueTable::uniform(56.865, 551);
    CHECK(t.size() == 551);
    CHECK(t.grid.front() == 0.0);
    CHECK(t.grid.back() == 56.865);
    CHECK(t.uniform_spacing());
}
