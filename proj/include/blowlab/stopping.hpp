#ifndef BLOWLAB_STOPPING_HPP
#define BLOWLAB_STOPPING_HPP

#include <Eigen/Dense>

#include "blowlab/params.hpp"

namespace blowlab {

/**
 * Description of a pathwise exponential functional
 *   int_0^t combine( exp(rho_w W + rho_bh B^H + drift s), ... ) ds.
 * MinOfTwo / MaxOfTwo take the pointwise min/max of two such integrands
 * before integrating.
 */
struct ExpFunctionalSpec {
    enum class Combine { Single, MinOfTwo, MaxOfTwo };

    double rho_w = 0.0;
    double rho_bh = 0.0;
    double drift = 0.0;
    Combine combine = Combine::Single;
    double rho_w2 = 0.0;
    double rho_bh2 = 0.0;
    double drift2 = 0.0;
};

struct CumulativeFunctional {
    Eigen::ArrayXd values;  // trapezoid cumulative, values[0] = 0, nondecreasing
    bool saturated = false; // some exponent hit the clamp
};

/// Trapezoid cumulative integral of the spec's integrand along the path.
/// Exponents are clamped at +-exponent_cap (saturation flagged, not hidden);
/// an exploding integrand means the crossing is already certain.
CumulativeFunctional cumulative_exp_functional(const SamplePath& path,
                                               const ExpFunctionalSpec& spec,
                                               double exponent_cap = 700.0);

/// First-crossing time of a nondecreasing cumulative against a threshold,
/// linearly interpolated inside the bracketing cell; censored at the horizon
/// when the threshold is never reached.
struct StoppingEstimate {
    enum class Kind { Crossed, Censored };

    Kind kind = Kind::Censored;
    double t_hat = 0.0;             // crossing time, or the horizon when censored
    int bracket_lo = -1, bracket_hi = -1;
    double threshold = 0.0;
    double value_at_horizon = 0.0;
    bool saturated = false;

    bool crossed() const { return kind == Kind::Crossed; }
    /// Crossing time as an extended real (+inf when censored); makes the
    /// pathwise order checks exact.
    double time_or_inf() const;
};

StoppingEstimate first_crossing(const Eigen::ArrayXd& cumulative, const TimeGrid& grid,
                                double threshold);

enum class BetaCase { EqualBeta, StrictBeta };

/// tau_*: crossing of int exp(rho1 W + rho2 B^H) against theta_lower.
/// Requires the coupling condition, gamma_i = lambda + k_i1^2/2, eigen-multiple data.
StoppingEstimate tau_lower_star(const SamplePath& path, const SystemParams& params,
                                const DerivedConstants& consts);

/// tau_1^*: crossing of int exp(rho1 W + rho2 B^H + beta(-lambda+gamma-k^2)s)
/// against 2^beta E(0)^{-beta} / beta. Requires beta1 == beta2 and the coupling condition.
StoppingEstimate tau_upper_1(const SamplePath& path, const SystemParams& params,
                             const DerivedConstants& consts);

/// tau_2^*: strict-beta upper bound against N; requires the mass condition.
StoppingEstimate tau_upper_2(const SamplePath& path, const SystemParams& params,
                             const DerivedConstants& consts);

/// tau_**: earlier of the two general-case crossings (no coupling condition).
StoppingEstimate tau_double_star(const SamplePath& path, const SystemParams& params,
                                 const DerivedConstants& consts);

/// tau': max of the two tau_** integrands against the min of their thresholds;
/// tau' <= tau_** pathwise by construction.
StoppingEstimate tau_prime(const SamplePath& path, const SystemParams& params,
                           const DerivedConstants& consts);

/// General-case upper bound: min of the two integrands with the beta-case
/// drift, against theta_u1 (equal betas) or N (strict betas).
StoppingEstimate tau_upper_general(const SamplePath& path, const SystemParams& params,
                                   const DerivedConstants& consts, BetaCase beta_case);

}  // namespace blowlab

#endif
