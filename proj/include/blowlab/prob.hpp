#ifndef BLOWLAB_PROB_HPP
#define BLOWLAB_PROB_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "blowlab/params.hpp"
#include "blowlab/stopping.hpp"

namespace blowlab {

/// Inputs of the fixed-horizon tail bounds: the functional's drift constant
/// (a or a_1), its coupling exponents, and the crossing threshold.
struct TailBoundInput {
    double horizon = 1.0;
    double rho1 = 0.0, rho2 = 0.0;
    double drift_a = 0.0;  // a = beta (lambda - gamma + k^2), resp. the beta_2 variant
    double hurst = 0.7;
    NoiseCoupling coupling = NoiseCoupling::Independent;
    double threshold = 1.0;  // theta_u1 or N
};

TailBoundInput make_tail_input(const SystemParams& params, const DerivedConstants& consts,
                               BetaCase beta_case, double horizon);

/// E[exp(rho1 W(s) + rho2 B^H(s))] = exp(Var/2); the Volterra-dependent cross
/// term 2 rho1 rho2 int_0^s K_H(s,r) dr is evaluated by quadrature.
double mgf_mixed(double s, double rho1, double rho2, double hurst, NoiseCoupling coupling);

/// mu(T) = int_0^T e^{-a s} E[exp(rho1 W + rho2 B^H)] ds (adaptive quadrature).
double mu_T(double horizon, double drift_a, double rho1, double rho2, double hurst,
            NoiseCoupling coupling);

/// A probability bound together with its applicability diagnostics.
struct BoundValue {
    std::optional<double> value;  // in [0,1] when applicable
    std::string diagnostics;
    bool applicable() const { return value.has_value(); }
};

/// Concentration bound on P(tau^* <= T):
///   min(1, 2 exp(-(ln theta - ln mu(T))^2 / (2 M^2))), M^2 = 2 rho1^2 T + 2 rho2^2 T^{2H};
/// requires theta > mu(T). literal_denominator switches the denominator to
/// the alternative reading 2 (M^2)^2; both are reported by the bounds table
/// when requested.
BoundValue tail_bound_concentration(const TailBoundInput& input, bool literal_denominator = false);

/// Markov/Hoelder bounds on P(tau^* <= T) for the dependent and independent
/// couplings. The beta-case picks the prefactor (1/(2 theta_u1), 1/N, ...).
BoundValue tail_bound_markov(const SystemParams& params, const DerivedConstants& consts,
                             BetaCase beta_case, double horizon);

struct LAlphaControls {
    int n_paths = 2000;
    double t_max = 20.0;
    int n_steps = 2000;
    std::uint64_t seed = 20240501;
    int n_workers = 0;  // 0: hardware choice
};

struct LAlphaEstimate {
    double value = 1.0;       // clamped below at 1
    double std_error = 0.0;
    double value_2tmax = 1.0; // sensitivity rerun at doubled horizon
    int n_paths = 0;
};

/// Monte Carlo estimate of
///   L(alpha) = E[ sup_t ( ln(int_0^t e^{-a s + rho1 W + rho2 B^H} ds + 1) + t^alpha )
///                     / ( ln(U + 1) + t^alpha ) ],
/// the sup taken over the simulation grid; per-path values clamped below at 1.
LAlphaEstimate estimate_L_alpha(const SystemParams& params, const DerivedConstants& consts,
                                double alpha, BetaCase beta_case, const LAlphaControls& controls);

/// Blow-up probability lower bound
///   1 - exp( -alpha^2 (L-1)^2 / ( rho1^2 (2a-1)^{...} ... ) ), clamped to [0,1].
double lower_bound_malliavin(const SystemParams& params, const DerivedConstants& consts,
                             double alpha, BetaCase beta_case, double l_alpha);

/// Inputs of the Gamma-law bound (independent coupling, rho1 = rho2 = rho,
/// H in (3/4, 1), drift constant a > 0, crossing threshold theta).
struct GammaLawInput {
    double rho = 1.0;
    double drift_a = 1.0;
    double threshold = 1.0;

    double nu() const { return 2.0 * drift_a / (rho * rho); }
};

/// The two readings of the Gamma-law lower bound on P(tau < infinity):
///   printed:  integral of the stated density from rho^2 theta / 2, equal to
///             P(nu, 2 nu / (rho^2 theta));
///   derived:  P(Z_nu < 2 / (rho^2 theta)) from the time-change identity.
/// Both are reported; a Monte Carlo oracle adjudicates between them.
struct GammaLawBounds {
    double printed = 0.0;
    double derived = 0.0;
    double discrepancy = 0.0;  // |printed - derived|
};

GammaLawBounds gamma_law_lower_bound(const GammaLawInput& input);

/// Hypothesis check for the Gamma-law bound; empty string when satisfied.
std::string gamma_law_hypothesis_issue(const SystemParams& params,
                                       const DerivedConstants& consts);

}  // namespace blowlab

#endif
