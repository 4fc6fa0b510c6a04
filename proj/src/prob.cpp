#include "blowlab/prob.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "blowlab/common.hpp"
#include "blowlab/quadrature.hpp"
#include "blowlab/rng.hpp"
#include "blowlab/special.hpp"

namespace blowlab {

TailBoundInput make_tail_input(const SystemParams& params, const DerivedConstants& consts,
                               BetaCase beta_case, double horizon) {
    if (!consts.rho.has_value())
        throw ConfigError("make_tail_input: coupling condition does not hold");
    TailBoundInput in;
    in.horizon = horizon;
    in.rho1 = (*consts.rho)[0];
    in.rho2 = (*consts.rho)[1];
    in.hurst = params.hurst;
    in.coupling = params.coupling;
    if (beta_case == BetaCase::EqualBeta) {
        if (!consts.theta_u1.has_value())
            throw ConfigError("make_tail_input: theta_u1 unavailable");
        in.drift_a = consts.a;
        in.threshold = *consts.theta_u1;
    } else {
        if (!consts.theta_u2.has_value())
            throw ConfigError("make_tail_input: upper bound unavailable (mass condition)");
        in.drift_a = consts.a1;
        in.threshold = *consts.theta_u2;
    }
    return in;
}

double mgf_mixed(double s, double rho1, double rho2, double hurst, NoiseCoupling coupling) {
    if (s < 0.0) throw NumericalError("mgf_mixed: requires s >= 0");
    if (s == 0.0) return 1.0;
    double var = rho1 * rho1 * s + rho2 * rho2 * std::pow(s, 2.0 * hurst);
    if (coupling == NoiseCoupling::VolterraDependent && rho1 != 0.0 && rho2 != 0.0)
        var += 2.0 * rho1 * rho2 * volterra_kernel_integral(s, hurst);
    return std::exp(0.5 * var);
}

double mu_T(double horizon, double drift_a, double rho1, double rho2, double hurst,
            NoiseCoupling coupling) {
    if (!(horizon > 0.0)) throw NumericalError("mu_T: requires T > 0");
    auto f = [=](double s) {
        return std::exp(-drift_a * s) * mgf_mixed(s, rho1, rho2, hurst, coupling);
    };
    const double scale = std::max(f(0.5 * horizon), std::max(f(0.0), f(horizon)));
    return adaptive_simpson(f, 0.0, horizon, 1e-10 * scale * horizon, 30);
}

BoundValue tail_bound_concentration(const TailBoundInput& in, bool literal_denominator) {
    BoundValue out;
    const double mu = mu_T(in.horizon, in.drift_a, in.rho1, in.rho2, in.hurst, in.coupling);
    if (!(in.threshold > mu)) {
        out.diagnostics = "inapplicable: threshold <= mu(T)";
        return out;
    }
    const double t2h = std::pow(in.horizon, 2.0 * in.hurst);
    const double m_sq = 2.0 * in.rho1 * in.rho1 * in.horizon + 2.0 * in.rho2 * in.rho2 * t2h;
    if (!(m_sq > 0.0)) {
        // deterministic functional: crossing is a 0/1 event, the bound degenerates
        out.diagnostics = "inapplicable: zero noise variance";
        return out;
    }
    const double delta = std::log(in.threshold) - std::log(mu);
    const double denom = literal_denominator ? 2.0 * m_sq * m_sq : 2.0 * m_sq;
    out.value = std::min(1.0, 2.0 * std::exp(-delta * delta / denom));
    out.diagnostics = literal_denominator ? "denominator 2(M^2)^2 (literal)" : "denominator 2M^2";
    return out;
}

namespace {

// (e^{x T} - 1) / x with the removable singularity at x = 0.
double expm1_over(double x, double horizon) {
    if (std::abs(x) < 1e-12) return horizon * (1.0 + 0.5 * x * horizon);
    return std::expm1(x * horizon) / x;
}

}  // namespace

BoundValue tail_bound_markov(const SystemParams& params, const DerivedConstants& consts,
                             BetaCase beta_case, double horizon) {
    BoundValue out;
    const TailBoundInput in = make_tail_input(params, consts, beta_case, horizon);
    const double beta = beta_case == BetaCase::EqualBeta ? params.beta1 : params.beta2;
    const double d = -in.drift_a;  // integrand drift beta(-lambda+gamma-k^2)

    double prefactor = 0.0;
    if (params.coupling == NoiseCoupling::VolterraDependent) {
        // dependent case: hypothesis rho1^2 > a
        if (!(in.rho1 * in.rho1 > in.drift_a)) {
            out.diagnostics = "inapplicable: rho1^2 <= drift constant";
            return out;
        }
        prefactor = beta_case == BetaCase::EqualBeta
                        ? std::pow(2.0, -(beta + 1.0)) * beta * std::pow(consts.e0, beta)
                        : 1.0 / in.threshold;
        const double first = expm1_over(in.rho1 * in.rho1 + d, horizon);
        const double second = adaptive_simpson(
            [&](double s) {
                return std::exp(d * s + 2.0 * in.rho2 * in.rho2 * std::pow(s, 2.0 * in.hurst));
            },
            0.0, horizon, 1e-10 * horizon, 30);
        out.value = std::min(1.0, prefactor * (first + second));
        out.diagnostics = "dependent coupling";
    } else {
        prefactor = beta_case == BetaCase::EqualBeta
                        ? std::pow(2.0, -beta) * beta * std::pow(consts.e0, beta)
                        : 1.0 / in.threshold;
        const double integral = adaptive_simpson(
            [&](double s) {
                return std::exp((0.5 * in.rho1 * in.rho1 + d) * s +
                                0.5 * in.rho2 * in.rho2 * std::pow(s, 2.0 * in.hurst));
            },
            0.0, horizon, 1e-10 * horizon, 30);
        out.value = std::min(1.0, prefactor * integral);
        out.diagnostics = "independent coupling";
    }
    return out;
}

LAlphaEstimate estimate_L_alpha(const SystemParams& params, const DerivedConstants& consts,
                                double alpha, BetaCase beta_case, const LAlphaControls& controls) {
    if (!(alpha > params.hurst))
        throw ConfigError("estimate_L_alpha: requires alpha > H");
    const TailBoundInput base = make_tail_input(params, consts, beta_case, 1.0);

    auto run = [&](double t_max, int n_steps) {
        const TimeGrid grid(t_max, n_steps);
        const Eigen::ArrayXd t = grid.times();
        Eigen::ArrayXd t_alpha(t.size());
        for (int j = 0; j < t.size(); ++j) t_alpha[j] = std::pow(t[j], alpha);
        const double log_u1 = std::log(base.threshold + 1.0);

        const int n_paths = controls.n_paths;
        std::vector<double> sups(n_paths);
        int n_workers = controls.n_workers > 0
                            ? controls.n_workers
                            : static_cast<int>(std::thread::hardware_concurrency());
        n_workers = std::max(1, std::min(n_workers, n_paths));

        auto worker = [&](int begin, int end) {
            for (int i = begin; i < end; ++i) {
                Rng rng = Rng::for_path(controls.seed, static_cast<std::uint64_t>(i));
                SamplePath path;
                path.grid = grid;
                path.hurst = params.hurst;
                path.coupling = params.coupling;
                if (params.coupling == NoiseCoupling::Independent) {
                    path.w = sample_bm(grid, rng);
                    path.bh = sample_fbm(grid, params.hurst, rng);
                } else {
                    const Eigen::ArrayXd dw = bm_increments(grid, rng);
                    path.w.resize(grid.n_points());
                    path.w[0] = 0.0;
                    for (int j = 0; j < grid.n_steps; ++j) path.w[j + 1] = path.w[j] + dw[j];
                    path.bh = sample_fbm_volterra(grid, params.hurst, dw);
                }
                ExpFunctionalSpec spec;
                spec.rho_w = base.rho1;
                spec.rho_bh = base.rho2;
                spec.drift = -base.drift_a;
                const auto cum = cumulative_exp_functional(path, spec);
                double sup = 0.0;
                for (int j = 0; j < t.size(); ++j) {
                    const double ratio =
                        (std::log1p(cum.values[j]) + t_alpha[j]) / (log_u1 + t_alpha[j]);
                    sup = std::max(sup, ratio);
                }
                sups[i] = std::max(1.0, sup);  // sup over all t >= 0 tends to 1 from above
            }
        };
        if (n_workers == 1) {
            worker(0, n_paths);
        } else {
            std::vector<std::thread> pool;
            const int chunk = (n_paths + n_workers - 1) / n_workers;
            for (int w = 0; w < n_workers; ++w) {
                const int b = w * chunk;
                const int e = std::min(n_paths, b + chunk);
                if (b < e) pool.emplace_back(worker, b, e);
            }
            for (auto& th : pool) th.join();
        }
        double mean = 0.0, comp = 0.0;
        for (double v : sups) {
            const double y = v - comp;
            const double s = mean + y;
            comp = (s - mean) - y;
            mean = s;
        }
        mean /= n_paths;
        double var = 0.0;
        for (double v : sups) var += (v - mean) * (v - mean);
        var /= std::max(1, n_paths - 1);
        return std::pair<double, double>(mean, std::sqrt(var / n_paths));
    };

    LAlphaEstimate est;
    est.n_paths = controls.n_paths;
    const auto [mean, se] = run(controls.t_max, controls.n_steps);
    est.value = std::max(1.0, mean);
    est.std_error = se;
    const auto [mean2, se2] = run(2.0 * controls.t_max, 2 * controls.n_steps);
    (void)se2;
    est.value_2tmax = std::max(1.0, mean2);
    return est;
}

double lower_bound_malliavin(const SystemParams& params, const DerivedConstants& consts,
                             double alpha, BetaCase beta_case, double l_alpha) {
    if (!(alpha > params.hurst))
        throw ConfigError("lower_bound_malliavin: requires alpha > H");
    const TailBoundInput in = make_tail_input(params, consts, beta_case, 1.0);
    const double h = params.hurst;
    const double log_u1 = std::log(in.threshold + 1.0);

    const double term_w = in.rho1 * in.rho1 * std::pow(2.0 * alpha - 1.0, 2.0 - 1.0 / alpha) *
                          std::pow(log_u1, 1.0 / alpha - 2.0);
    const double term_bh = 2.0 * in.rho2 * in.rho2 * alpha * alpha *
                           std::pow(log_u1, 2.0 * h / alpha - 2.0) *
                           std::pow((alpha - h) / alpha, 2.0 - 2.0 * h / alpha);
    const double denom = term_w + term_bh;
    if (!(denom > 0.0)) return 0.0;
    const double excess = l_alpha - 1.0;
    const double bound = 1.0 - std::exp(-alpha * alpha * excess * excess / denom);
    return std::clamp(bound, 0.0, 1.0);
}

GammaLawBounds gamma_law_lower_bound(const GammaLawInput& input) {
    if (!(input.rho != 0.0)) throw NumericalError("gamma_law_lower_bound: rho must be nonzero");
    if (!(input.drift_a > 0.0))
        throw NumericalError("gamma_law_lower_bound: drift constant must be positive");
    if (!(input.threshold > 0.0))
        throw NumericalError("gamma_law_lower_bound: threshold must be positive");

    const double nu = input.nu();
    const double rho_sq = input.rho * input.rho;
    GammaLawBounds out;
    // printed: int_{rho^2 theta / 2}^inf h(y) dy  ==  P(nu, nu / L), L = rho^2 theta / 2
    out.printed = reg_lower_inc_gamma(nu, 2.0 * nu / (rho_sq * input.threshold));
    // derived: P(Z_nu < 2 / (rho^2 theta)) via t = rho^2 s / 4 and the 1/(2 Z_nu) identity
    out.derived = reg_lower_inc_gamma(nu, 2.0 / (rho_sq * input.threshold));
    out.discrepancy = std::abs(out.printed - out.derived);
    return out;
}

std::string gamma_law_hypothesis_issue(const SystemParams& params,
                                       const DerivedConstants& consts) {
    if (params.coupling != NoiseCoupling::Independent)
        return "requires independent W and B^H";
    if (!(params.hurst > 0.75)) return "requires H > 3/4";
    if (!consts.rho.has_value()) return "requires the coupling condition";
    if (std::abs((*consts.rho)[0] - (*consts.rho)[1]) >
        1e-12 * std::max(1.0, std::abs((*consts.rho)[0])))
        return "requires rho1 == rho2";
    const double a = params.equal_betas() ? consts.a : consts.a1;
    if (!(a > 0.0)) return "requires a positive drift constant";
    return "";
}

}  // namespace blowlab
