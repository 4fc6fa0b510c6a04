#ifndef BLOWLAB_TEST_SUPPORT_HPP
#define BLOWLAB_TEST_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "blowlab/params.hpp"

namespace test_support {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Composite Simpson on a fixed panel count; independent of the library's
// adaptive quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x = a + i * h;
        acc += h / 6.0 * (f(x) + 4.0 * f(x + 0.5 * h) + f(x + h));
    }
    return acc;
}

inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

// Equal-beta system with the coupling condition, gamma_i = lambda + k_i1^2/2,
// eigen-multiple data; a = 0 (k columns equal).
inline blowlab::SystemParams coupled_system(double kappa, double c1, double c2,
                                            double hurst = 0.7) {
    blowlab::SystemParams p;
    p.beta1 = p.beta2 = 1.0;
    p.k << kappa, kappa, kappa, kappa;
    p.gamma1 = p.gamma2 = 1.0 + kappa * kappa / 2.0;
    p.hurst = hurst;
    p.domain_length = kPi;
    p.initial = blowlab::EigenMultipleData{c1, c2};
    return p;
}

inline blowlab::SamplePath zero_path(const blowlab::TimeGrid& grid, double hurst = 0.7) {
    blowlab::SamplePath path;
    path.grid = grid;
    path.w = Eigen::ArrayXd::Zero(grid.n_points());
    path.bh = Eigen::ArrayXd::Zero(grid.n_points());
    path.hurst = hurst;
    return path;
}

}  // namespace test_support

#endif
