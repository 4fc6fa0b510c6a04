#include "blowlab/noise.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <ostream>
#include <vector>

#include "blowlab/quadrature.hpp"
#include "blowlab/report.hpp"
#include "blowlab/special.hpp"

namespace blowlab {

double fbm_covariance(double t, double s, double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw NumericalError("fbm_covariance: H must lie in (0,1)");
    if (t < 0.0 || s < 0.0)
        throw NumericalError("fbm_covariance: times must be nonnegative");
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

double fgn_autocovariance(double dt, double hurst, int lag) {
    const double h2 = 2.0 * hurst;
    const double k = std::abs(static_cast<double>(lag));
    return 0.5 * std::pow(dt, h2) *
           (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
}

Eigen::ArrayXd bm_increments(const TimeGrid& grid, Rng& rng) {
    const double sd = std::sqrt(grid.dt());
    Eigen::ArrayXd dw(grid.n_steps);
    for (int i = 0; i < grid.n_steps; ++i) dw[i] = sd * rng.normal();
    return dw;
}

Eigen::ArrayXd sample_bm(const TimeGrid& grid, Rng& rng) {
    Eigen::ArrayXd w(grid.n_points());
    w[0] = 0.0;
    const double sd = std::sqrt(grid.dt());
    for (int i = 0; i < grid.n_steps; ++i) w[i + 1] = w[i] + sd * rng.normal();
    return w;
}

namespace {

constexpr int kCholeskyCutoff = 64;        // small grids: O(n^3) factor is cheap and exact
constexpr double kEigRelTol = 1e-9;        // circulant eigenvalue negativity tolerance

Eigen::ArrayXd circulant_spectrum(const TimeGrid& grid, double hurst) {
    const int n = grid.n_steps;
    const int m = 2 * n;
    std::vector<double> first_row(m);
    for (int j = 0; j <= n; ++j) first_row[j] = fgn_autocovariance(grid.dt(), hurst, j);
    for (int j = n + 1; j < m; ++j) first_row[j] = first_row[m - j];

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> freq;
    fft.fwd(freq, first_row);

    Eigen::ArrayXd lambda(m);
    for (int k = 0; k < m; ++k) lambda[k] = freq[k].real();
    return lambda;
}

Eigen::MatrixXd increment_cholesky(const TimeGrid& grid, double hurst) {
    const int n = grid.n_steps;
    Eigen::MatrixXd cov(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double c = fgn_autocovariance(grid.dt(), hurst, i - j);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("FbmSampler: increment covariance is not positive definite");
    return llt.matrixL();
}

}  // namespace

FbmSampler::FbmSampler(const TimeGrid& grid, double hurst, Method method)
    : grid_(grid), hurst_(hurst), resolved_(method) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw NumericalError("FbmSampler: H must lie in (0,1)");

    if (resolved_ == Method::Auto)
        resolved_ = grid.n_steps <= kCholeskyCutoff ? Method::Cholesky : Method::CirculantEmbedding;

    if (resolved_ == Method::CirculantEmbedding) {
        Eigen::ArrayXd lambda = circulant_spectrum(grid_, hurst_);
        const double max_eig = lambda.maxCoeff();
        const double min_eig = lambda.minCoeff();
        if (min_eig < -kEigRelTol * max_eig) {
            if (method == Method::CirculantEmbedding)
                throw NumericalError("FbmSampler: circulant embedding not nonnegative-definite");
            resolved_ = Method::Cholesky;  // Auto path: fall back
        } else {
            spectrum_ = lambda.max(0.0);  // clamp roundoff-scale negatives
        }
    }
    if (resolved_ == Method::Cholesky) chol_ = increment_cholesky(grid_, hurst_);
}

Eigen::ArrayXd FbmSampler::sample(Rng& rng) const {
    const int n = grid_.n_steps;
    Eigen::ArrayXd increments(n);

    if (resolved_ == Method::CirculantEmbedding) {
        const int m = 2 * n;
        std::vector<std::complex<double>> v(m);
        v[0] = std::sqrt(spectrum_[0]) * rng.normal();
        for (int k = 1; k < n; ++k) {
            const double scale = std::sqrt(0.5 * spectrum_[k]);
            const double re = scale * rng.normal();
            const double im = scale * rng.normal();
            v[k] = {re, im};
            v[m - k] = {re, -im};
        }
        v[n] = std::sqrt(spectrum_[n]) * rng.normal();

        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> out;
        fft.fwd(out, v);
        const double norm = 1.0 / std::sqrt(static_cast<double>(m));
        for (int j = 0; j < n; ++j) increments[j] = out[j].real() * norm;
    } else {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.normal();
        increments = (chol_ * z).array();
    }

    Eigen::ArrayXd path(n + 1);
    path[0] = 0.0;
    for (int j = 0; j < n; ++j) path[j + 1] = path[j] + increments[j];
    return path;
}

Eigen::ArrayXd sample_fbm(const TimeGrid& grid, double hurst, Rng& rng) {
    return FbmSampler(grid, hurst).sample(rng);
}

namespace {

void require_volterra_domain(double hurst) {
    if (!(hurst > 0.5 && hurst < 1.0))
        throw NumericalError("volterra_kernel: H must lie in (1/2, 1)");
}

// c_H = sqrt( H (2H-1) / B(2-2H, H-1/2) ); K(t,s) = c_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du.
double volterra_c(double hurst) {
    const double log_beta =
        log_gamma(2.0 - 2.0 * hurst) + log_gamma(hurst - 0.5) - log_gamma(1.5 - hurst);
    return std::sqrt(hurst * (2.0 * hurst - 1.0) / std::exp(log_beta));
}

}  // namespace

double volterra_kernel(double t, double s, double hurst) {
    require_volterra_domain(hurst);
    if (!(s > 0.0 && s < t))
        throw NumericalError("volterra_kernel: requires 0 < s < t");

    // Displayed two-term form with C_H = c_H / (H - 1/2); the inner integral
    // int_s^t u^{H-3/2} (u-s)^{H-1/2} du is computed after the substitution
    // u = s + w^{1/q}, q = H + 1/2, which removes the corner at u = s.
    const double h = hurst;
    const double ch = volterra_c(h) / (h - 0.5);
    const double q = h + 0.5;
    const double wmax = std::pow(t - s, q);
    const double inner = adaptive_simpson(
        [s, h, q](double w) { return std::pow(s + std::pow(w, 1.0 / q), h - 1.5); },
        0.0, wmax, 1e-11 * std::max(1.0, wmax * std::pow(s, h - 1.5))) / q;
    const double first = std::pow(t / s, h - 0.5) * std::pow(t - s, h - 0.5);
    return ch * (first - (h - 0.5) * std::pow(s, 0.5 - h) * inner);
}

double volterra_kernel_integral(double t, double hurst) {
    require_volterra_domain(hurst);
    if (!(t > 0.0)) throw NumericalError("volterra_kernel_integral: requires t > 0");
    // s = v^p flattens the integrable s^{1/2-H} blow-up at s = 0.
    const double p = 2.0 / (3.0 - 2.0 * hurst);
    const double vmax = std::pow(t, 1.0 / p);
    auto f = [t, hurst, p](double v) {
        if (v <= 0.0) return 0.0;
        const double s = std::pow(v, p);
        if (s >= t) return 0.0;
        return volterra_kernel(t, s, hurst) * p * std::pow(v, p - 1.0);
    };
    return adaptive_simpson(f, 0.0, vmax, 1e-9 * std::pow(t, hurst + 0.5), 30);
}

double volterra_kernel_sq_integral(double t, double hurst) {
    require_volterra_domain(hurst);
    if (!(t > 0.0)) throw NumericalError("volterra_kernel_sq_integral: requires t > 0");
    const double p = 1.0 / (2.0 - 2.0 * hurst);
    const double vmax = std::pow(t, 1.0 / p);
    auto f = [t, hurst, p](double v) {
        if (v <= 0.0) return 0.0;
        const double s = std::pow(v, p);
        if (s >= t) return 0.0;
        const double k = volterra_kernel(t, s, hurst);
        return k * k * p * std::pow(v, p - 1.0);
    };
    return adaptive_simpson(f, 0.0, vmax, 1e-9 * std::pow(t, 2.0 * hurst), 30);
}

VolterraSampler::VolterraSampler(const TimeGrid& grid, double hurst)
    : grid_(grid), hurst_(hurst) {
    require_volterra_domain(hurst);
    const int n = grid.n_steps;
    const double dt = grid.dt();
    const double h = hurst;

    // Final-cell average of K(t_j, .) from the leading-order expansion
    // K(t,s) ~ c_H (t-s)^{H-1/2} / (H-1/2) as s -> t.
    const double last_cell =
        volterra_c(h) * std::pow(dt, h - 0.5) / ((h - 0.5) * (h + 0.5));

    kbar_ = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= n; ++j) {
        const double tj = grid.time(j);
        for (int i = 0; i + 1 < j; ++i) {
            const double mid = (grid.time(i) + grid.time(i + 1)) * 0.5;
            kbar_(j - 1, i) = volterra_kernel(tj, mid, h);
        }
        kbar_(j - 1, j - 1) = last_cell;
    }
}

Eigen::ArrayXd VolterraSampler::sample_from_increments(const Eigen::ArrayXd& dw) const {
    const int n = grid_.n_steps;
    if (dw.size() != n)
        throw NumericalError("VolterraSampler: increment array does not match the grid");
    Eigen::VectorXd bh_tail =
        kbar_.triangularView<Eigen::Lower>() * dw.matrix();
    Eigen::ArrayXd bh(n + 1);
    bh[0] = 0.0;
    bh.tail(n) = bh_tail.array();
    return bh;
}

Eigen::ArrayXd sample_fbm_volterra(const TimeGrid& grid, double hurst,
                                   const Eigen::ArrayXd& w_increments) {
    return VolterraSampler(grid, hurst).sample_from_increments(w_increments);
}

void write_path_csv(std::ostream& os, const SamplePath& path) {
    os << "t,w,bh\n";
    for (int j = 0; j < path.grid.n_points(); ++j)
        os << format_double(path.grid.time(j)) << ',' << format_double(path.w[j]) << ','
           << format_double(path.bh[j]) << '\n';
}

}  // namespace blowlab
