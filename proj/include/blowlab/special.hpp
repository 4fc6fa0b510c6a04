#ifndef BLOWLAB_SPECIAL_HPP
#define BLOWLAB_SPECIAL_HPP

namespace blowlab {

/// ln Gamma(x) for x > 0 (Lanczos approximation, ~1e-14 relative).
double log_gamma(double x);

/// Regularized lower incomplete gamma P(nu, u) = gamma(nu, u) / Gamma(nu).
/// Series for u < nu + 1, continued fraction otherwise; absolute error <= 1e-12.
double reg_lower_inc_gamma(double nu, double u);

/// Q(nu, u) = 1 - P(nu, u).
double reg_upper_inc_gamma(double nu, double u);

/// CDF of a Gamma(nu, 1) random variable (density y^{nu-1} e^{-y} / Gamma(nu)).
inline double gamma_cdf(double nu, double y) { return reg_lower_inc_gamma(nu, y); }

}  // namespace blowlab

#endif
