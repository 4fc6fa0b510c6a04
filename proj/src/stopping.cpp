#include "blowlab/stopping.hpp"

#include <cmath>
#include <limits>

#include "blowlab/common.hpp"

namespace blowlab {

CumulativeFunctional cumulative_exp_functional(const SamplePath& path,
                                               const ExpFunctionalSpec& spec,
                                               double exponent_cap) {
    const int n = path.grid.n_steps;
    if (path.w.size() != n + 1 || path.bh.size() != n + 1)
        throw NumericalError("cumulative_exp_functional: path arrays do not match the grid");

    const Eigen::ArrayXd t = path.grid.times();
    Eigen::ArrayXd expo = spec.rho_w * path.w + spec.rho_bh * path.bh + spec.drift * t;
    if (spec.combine != ExpFunctionalSpec::Combine::Single) {
        const Eigen::ArrayXd expo2 =
            spec.rho_w2 * path.w + spec.rho_bh2 * path.bh + spec.drift2 * t;
        if (spec.combine == ExpFunctionalSpec::Combine::MinOfTwo)
            expo = expo.min(expo2);
        else
            expo = expo.max(expo2);
    }

    CumulativeFunctional out;
    out.saturated = (expo.abs() > exponent_cap).any();
    if (out.saturated) expo = expo.min(exponent_cap).max(-exponent_cap);

    const Eigen::ArrayXd integrand = expo.exp();
    out.values.resize(n + 1);
    out.values[0] = 0.0;
    const double half_dt = 0.5 * path.grid.dt();
    for (int j = 0; j < n; ++j)
        out.values[j + 1] = out.values[j] + half_dt * (integrand[j] + integrand[j + 1]);
    return out;
}

double StoppingEstimate::time_or_inf() const {
    return crossed() ? t_hat : std::numeric_limits<double>::infinity();
}

StoppingEstimate first_crossing(const Eigen::ArrayXd& cumulative, const TimeGrid& grid,
                                double threshold) {
    if (!(threshold > 0.0)) throw NumericalError("first_crossing: threshold must be positive");
    if (cumulative.size() != grid.n_points())
        throw NumericalError("first_crossing: cumulative does not match the grid");

    StoppingEstimate est;
    est.threshold = threshold;
    est.value_at_horizon = cumulative[cumulative.size() - 1];

    for (int j = 1; j < cumulative.size(); ++j) {
        if (cumulative[j] >= threshold) {
            est.kind = StoppingEstimate::Kind::Crossed;
            est.bracket_lo = j - 1;
            est.bracket_hi = j;
            const double lo = cumulative[j - 1];
            const double hi = cumulative[j];
            const double frac = hi > lo ? (threshold - lo) / (hi - lo) : 1.0;
            est.t_hat = grid.time(j - 1) + frac * grid.dt();
            return est;
        }
    }
    est.kind = StoppingEstimate::Kind::Censored;
    est.t_hat = grid.t_max;
    return est;
}

namespace {

StoppingEstimate crossing_of(const SamplePath& path, const ExpFunctionalSpec& spec,
                             double threshold) {
    const CumulativeFunctional cum = cumulative_exp_functional(path, spec);
    StoppingEstimate est = first_crossing(cum.values, path.grid, threshold);
    est.saturated = cum.saturated;
    return est;
}

void require(bool ok, const char* message) {
    if (!ok) throw ConfigError(message);
}

std::pair<double, double> general_thresholds(const SystemParams& params,
                                             const DerivedConstants& consts) {
    const auto* em = std::get_if<EigenMultipleData>(&params.initial);
    require(em != nullptr, "tau_double_star: requires eigen-multiple initial data");
    const double t1 =
        1.0 / (params.beta1 * std::pow(em->c1 * consts.eig.psi_sup, params.beta1));
    const double t2 =
        1.0 / (params.beta2 * std::pow(em->c2 * consts.eig.psi_sup, params.beta2));
    return {t1, t2};
}

}  // namespace

StoppingEstimate tau_lower_star(const SamplePath& path, const SystemParams& /*params*/,
                                const DerivedConstants& consts) {
    require(consts.rho.has_value(), "tau_lower_star: coupling condition does not hold");
    require(consts.gamma_matches_eigen,
            "tau_lower_star: requires gamma_i = lambda + k_i1^2 / 2");
    require(consts.theta_lower.has_value(),
            "tau_lower_star: requires eigen-multiple initial data");
    ExpFunctionalSpec spec;
    spec.rho_w = (*consts.rho)[0];
    spec.rho_bh = (*consts.rho)[1];
    return crossing_of(path, spec, *consts.theta_lower);
}

StoppingEstimate tau_upper_1(const SamplePath& path, const SystemParams& params,
                             const DerivedConstants& consts) {
    require(params.equal_betas(), "tau_upper_1: requires beta1 == beta2");
    require(consts.rho.has_value(), "tau_upper_1: coupling condition does not hold");
    require(consts.theta_u1.has_value(), "tau_upper_1: requires E(0) > 0");
    ExpFunctionalSpec spec;
    spec.rho_w = (*consts.rho)[0];
    spec.rho_bh = (*consts.rho)[1];
    spec.drift = consts.drift_upper_1();
    return crossing_of(path, spec, *consts.theta_u1);
}

StoppingEstimate tau_upper_2(const SamplePath& path, const SystemParams& params,
                             const DerivedConstants& consts) {
    require(params.beta1 > params.beta2, "tau_upper_2: requires beta1 > beta2");
    require(consts.rho.has_value(), "tau_upper_2: coupling condition does not hold");
    require(consts.mass_condition && consts.theta_u2.has_value(),
            "tau_upper_2: mass condition fails, upper bound unavailable");
    ExpFunctionalSpec spec;
    spec.rho_w = (*consts.rho)[0];
    spec.rho_bh = (*consts.rho)[1];
    spec.drift = consts.drift_upper_2();
    return crossing_of(path, spec, *consts.theta_u2);
}

StoppingEstimate tau_double_star(const SamplePath& path, const SystemParams& params,
                                 const DerivedConstants& consts) {
    require(consts.gamma_matches_eigen,
            "tau_double_star: requires gamma_i = lambda + k_i1^2 / 2");
    const auto [theta1, theta2] = general_thresholds(params, consts);
    const Eigen::Matrix2d g = reaction_exponents(params);

    ExpFunctionalSpec spec_a;
    spec_a.rho_w = g(0, 0);
    spec_a.rho_bh = g(0, 1);
    ExpFunctionalSpec spec_b;
    spec_b.rho_w = g(1, 0);
    spec_b.rho_bh = g(1, 1);

    const StoppingEstimate ea = crossing_of(path, spec_a, theta1);
    const StoppingEstimate eb = crossing_of(path, spec_b, theta2);
    StoppingEstimate earlier = ea.time_or_inf() <= eb.time_or_inf() ? ea : eb;
    earlier.saturated = ea.saturated || eb.saturated;
    return earlier;
}

StoppingEstimate tau_prime(const SamplePath& path, const SystemParams& params,
                           const DerivedConstants& consts) {
    require(consts.gamma_matches_eigen, "tau_prime: requires gamma_i = lambda + k_i1^2 / 2");
    const auto [theta1, theta2] = general_thresholds(params, consts);
    const Eigen::Matrix2d g = reaction_exponents(params);

    ExpFunctionalSpec spec;
    spec.combine = ExpFunctionalSpec::Combine::MaxOfTwo;
    spec.rho_w = g(0, 0);
    spec.rho_bh = g(0, 1);
    spec.rho_w2 = g(1, 0);
    spec.rho_bh2 = g(1, 1);
    return crossing_of(path, spec, std::min(theta1, theta2));
}

StoppingEstimate tau_upper_general(const SamplePath& path, const SystemParams& params,
                                   const DerivedConstants& consts, BetaCase beta_case) {
    const Eigen::Matrix2d g = reaction_exponents(params);
    ExpFunctionalSpec spec;
    spec.combine = ExpFunctionalSpec::Combine::MinOfTwo;
    spec.rho_w = g(0, 0);
    spec.rho_bh = g(0, 1);
    spec.rho_w2 = g(1, 0);
    spec.rho_bh2 = g(1, 1);

    double threshold = 0.0;
    if (beta_case == BetaCase::EqualBeta) {
        require(params.equal_betas(), "tau_upper_general: EqualBeta requires beta1 == beta2");
        require(consts.theta_u1.has_value(), "tau_upper_general: requires E(0) > 0");
        spec.drift = spec.drift2 = consts.drift_upper_1();
        threshold = *consts.theta_u1;
    } else {
        require(params.beta1 > params.beta2,
                "tau_upper_general: StrictBeta requires beta1 > beta2");
        require(consts.mass_condition && consts.theta_u2.has_value(),
                "tau_upper_general: mass condition fails, upper bound unavailable");
        spec.drift = spec.drift2 = consts.drift_upper_2();
        threshold = *consts.theta_u2;
    }
    return crossing_of(path, spec, threshold);
}

}  // namespace blowlab
