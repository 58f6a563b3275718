#pragma once

#include <cstddef>
#include <vector>

namespace qdet {

enum class TableInterp {
    PiecewiseConstant,  // value of the left node on each cell
    PiecewiseLinear,
};

// Value function sampled on a strictly increasing odds grid ending at the
// truncation threshold phibar. Evaluation beyond phibar is exactly zero.
struct ValueTable {
    std::vector<double> grid;
    std::vector<double> values;
    double phibar = 0.0;
    TableInterp interp = TableInterp::PiecewiseLinear;

    ValueTable() = default;
    ValueTable(std::vector<double> g, std::vector<double> v, double bar,
               TableInterp mode = TableInterp::PiecewiseLinear);

    static ValueTable uniform(double phibar, std::size_t points,
                              TableInterp mode = TableInterp::PiecewiseLinear);
    static ValueTable constant(double phibar, std::size_t points, double value,
                               TableInterp mode = TableInterp::PiecewiseLinear);

    std::size_t size() const { return grid.size(); }
    bool uniform_spacing() const { return uniform_; }
    double spacing() const { return step_; }

    double operator()(double phi) const;

    double min_value() const;
    double max_value() const;

  private:
    bool uniform_ = false;
    double step_ = 0.0;
    void detect_uniform();
};

}  // namespace qdet
