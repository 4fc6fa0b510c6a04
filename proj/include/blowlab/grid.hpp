#ifndef BLOWLAB_GRID_HPP
#define BLOWLAB_GRID_HPP

#include <Eigen/Dense>

#include "blowlab/common.hpp"

namespace blowlab {

/// Uniform partition of [0, t_max] with points t_j = j*dt, j = 0..n_steps.
struct TimeGrid {
    double t_max = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t_max_, int n_steps_) : t_max(t_max_), n_steps(n_steps_) {
        if (!(t_max > 0.0)) throw ConfigError("TimeGrid: t_max must be > 0");
        if (n_steps < 1) throw ConfigError("TimeGrid: n_steps must be >= 1");
    }

    double dt() const { return t_max / n_steps; }
    int n_points() const { return n_steps + 1; }

    double time(int j) const { return j * dt(); }

    Eigen::ArrayXd times() const {
        return Eigen::ArrayXd::LinSpaced(n_steps + 1, 0.0, t_max);
    }

    bool operator==(const TimeGrid& other) const {
        return t_max == other.t_max && n_steps == other.n_steps;
    }
};

}  // namespace blowlab

#endif
