#include "qdet/value_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdet/errors.hpp"

namespace qdet {

ValueTable::ValueTable(std::vector<double> g, std::vector<double> v, double bar, TableInterp mode)
    : grid(std::move(g)), values(std::move(v)), phibar(bar), interp(mode) {
    if (grid.size() < 2 || grid.size() != values.size())
        throw ConfigError("ValueTable: need matching grid/values with >= 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ConfigError("ValueTable: grid must be strictly increasing");
    detect_uniform();
}

ValueTable ValueTable::uniform(double phibar, std::size_t points, TableInterp mode) {
    if (points < 2 || !(phibar > 0.0)) throw ConfigError("ValueTable: invalid uniform grid spec");
    std::vector<double> g(points), v(points, 0.0);
    double step = phibar / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) g[i] = step * static_cast<double>(i);
    g.back() = phibar;
    return ValueTable(std::move(g), std::move(v), phibar, mode);
}

ValueTable ValueTable::constant(double phibar, std::size_t points, double value, TableInterp mode) {
    ValueTable t = uniform(phibar, points, mode);
    std::fill(t.values.begin(), t.values.end(), value);
    return t;
}

void ValueTable::detect_uniform() {
    step_ = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    uniform_ = true;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double expected = grid.front() + step_ * static_cast<double>(i);
        if (std::fabs(grid[i] - expected) > 1e-9 * (1.0 + std::fabs(expected))) {
            uniform_ = false;
            break;
        }
    }
}

double ValueTable::operator()(double phi) const {
    if (phi >= phibar) return 0.0;
    if (phi <= grid.front()) return values.front();
    std::size_t i;
    if (uniform_) {
        i = static_cast<std::size_t>((phi - grid.front()) / step_);
        if (i >= grid.size() - 1) i = grid.size() - 2;
        // guard against round-off at cell edges
        if (phi < grid[i]) --i;
        else if (phi >= grid[i + 1] && i + 2 < grid.size()) ++i;
    } else {
        i = static_cast<std::size_t>(
                std::upper_bound(grid.begin(), grid.end(), phi) - grid.begin()) - 1;
        if (i >= grid.size() - 1) i = grid.size() - 2;
    }
    if (interp == TableInterp::PiecewiseConstant) return values[i];
    double w = (phi - grid[i]) / (grid[i + 1] - grid[i]);
    return values[i] + w * (values[i + 1] - values[i]);
}

double ValueTable::min_value() const { return *std::min_element(values.begin(), values.end()); }
double ValueTable::max_value() const { return *std::max_element(values.begin(), values.end()); }

}  // namespace qdet
