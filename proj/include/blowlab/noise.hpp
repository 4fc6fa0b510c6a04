#ifndef BLOWLAB_NOISE_HPP
#define BLOWLAB_NOISE_HPP

#include <Eigen/Dense>
#include <iosfwd>

#include "blowlab/grid.hpp"
#include "blowlab/rng.hpp"

namespace blowlab {

enum class NoiseCoupling {
    Independent,        // W and B^H independent
    VolterraDependent,  // B^H(t) = int_0^t K_H(t,s) dW(s), same W
};

/// One realization of (W, B^H) on a shared grid. First entries are exactly 0.
struct SamplePath {
    TimeGrid grid;
    Eigen::ArrayXd w;   // W(t_j), length n_steps + 1
    Eigen::ArrayXd bh;  // B^H(t_j), length n_steps + 1
    double hurst = 0.5;
    NoiseCoupling coupling = NoiseCoupling::Independent;
};

/// Covariance of fractional Brownian motion,
/// R_H(t,s) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double fbm_covariance(double t, double s, double hurst);

/// Autocovariance of the stationary increment sequence on a step-dt grid.
double fgn_autocovariance(double dt, double hurst, int lag);

/// Brownian path: W(0) = 0, independent N(0, dt) increments. Consumes n_steps draws.
Eigen::ArrayXd sample_bm(const TimeGrid& grid, Rng& rng);

/// The n_steps Brownian increments of a W path.
Eigen::ArrayXd bm_increments(const TimeGrid& grid, Rng& rng);

/**
 * Exact-in-law fBm sampler on a uniform grid.
 *
 * Default method is circulant embedding of the increment sequence
 * (O(n log n) per path); small grids and embeddings that fail to be
 * nonnegative-definite fall back to a Cholesky factor of the increment
 * covariance. A non-PD Cholesky is an error, never patched.
 *
 * Construction precomputes the spectral / Cholesky data; sample() is const
 * and safe to call concurrently with distinct Rng objects.
 */
class FbmSampler {
public:
    enum class Method { Auto, CirculantEmbedding, Cholesky };

    FbmSampler(const TimeGrid& grid, double hurst, Method method = Method::Auto);

    /// A B^H path (length n_steps + 1, leading 0), exact in law on the grid.
    Eigen::ArrayXd sample(Rng& rng) const;

    Method method() const { return resolved_; }
    const TimeGrid& grid() const { return grid_; }
    double hurst() const { return hurst_; }

private:
    TimeGrid grid_;
    double hurst_;
    Method resolved_;
    Eigen::ArrayXd spectrum_;   // circulant eigenvalues, length 2 n_steps
    Eigen::MatrixXd chol_;      // lower factor of increment covariance
};

/// Convenience wrapper: one-shot exact sample (builds a sampler internally).
Eigen::ArrayXd sample_fbm(const TimeGrid& grid, double hurst, Rng& rng);

/// Volterra kernel K_H(t,s) for 0 < s < t and H in (1/2, 1), normalized so
/// that int_0^t K_H(t,s)^2 ds = t^{2H}.
double volterra_kernel(double t, double s, double hurst);

/// int_0^t K_H(t,s) ds  (the W--B^H cross covariance at time t).
double volterra_kernel_integral(double t, double hurst);

/// int_0^t K_H(t,s)^2 ds; equals t^{2H} up to quadrature error.
double volterra_kernel_sq_integral(double t, double hurst);

/**
 * Discretized Volterra map dW -> B^H on a uniform grid:
 *   B^H(t_j) ~= sum_{i<j} Kbar(t_j, cell_i) dW_i
 * with midpoint kernel values away from the diagonal and the final cell's
 * average taken from the leading-order expansion of K near s = t.
 */
class VolterraSampler {
public:
    VolterraSampler(const TimeGrid& grid, double hurst);

    Eigen::ArrayXd sample_from_increments(const Eigen::ArrayXd& dw) const;

    const TimeGrid& grid() const { return grid_; }
    double hurst() const { return hurst_; }
    const Eigen::MatrixXd& kernel_matrix() const { return kbar_; }

private:
    TimeGrid grid_;
    double hurst_;
    Eigen::MatrixXd kbar_;  // row j-1: weights for B^H(t_j)
};

Eigen::ArrayXd sample_fbm_volterra(const TimeGrid& grid, double hurst,
                                   const Eigen::ArrayXd& w_increments);

/// CSV dump, columns t,w,bh with a header row.
void write_path_csv(std::ostream& os, const SamplePath& path);

}  // namespace blowlab

#endif
