#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blowlab/common.hpp"
#include "blowlab/prob.hpp"
#include "blowlab/special.hpp"
#include "test_support.hpp"

using namespace blowlab;
using test_support::kPi;

TEST_CASE("mgf_mixed: Brownian and fBm marginals") {
    // rho2 = 0: Brownian MGF e^{rho1^2 s / 2}
    for (double s : {0.25, 1.0, 3.0})
        CHECK(mgf_mixed(s, 1.3, 0.0, 0.7, NoiseCoupling::Independent) ==
              doctest::Approx(std::exp(1.3 * 1.3 * s / 2.0)).epsilon(1e-14));
    // rho1 = 0, s = 1: unit variance regardless of H
    CHECK(mgf_mixed(1.0, 0.0, 0.8, 0.7, NoiseCoupling::Independent) ==
          doctest::Approx(std::exp(0.8 * 0.8 / 2.0)).epsilon(1e-14));
    CHECK(mgf_mixed(0.0, 1.0, 1.0, 0.7, NoiseCoupling::Independent) == 1.0);
}

TEST_CASE("mgf_mixed: dependent cross term vs Volterra Monte Carlo") {
    const double hurst = 0.7;
    const double want = mgf_mixed(1.0, 1.0, 1.0, hurst, NoiseCoupling::VolterraDependent);
    // E[e^{W+B^H}] with B^H driven by the same W; estimate over Volterra paths
    const TimeGrid grid(1.0, 256);
    const VolterraSampler vs(grid, hurst);
    const int n_paths = 40000;
    std::vector<double> samples(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        Rng rng = Rng::for_path(8100, i);
        const Eigen::ArrayXd dw = bm_increments(grid, rng);
        const Eigen::ArrayXd bh = vs.sample_from_increments(dw);
        samples[i] = std::exp(dw.sum() + bh[256]);
    }
    const double mean = test_support::mean_of(samples);
    const double se = std::sqrt(test_support::var_of(samples) / n_paths);
    CHECK(std::abs(mean - want) <= 5.0 * se);
    // the cross term matters: the independent value must sit far outside
    const double indep = mgf_mixed(1.0, 1.0, 1.0, hurst, NoiseCoupling::Independent);
    CHECK(std::abs(mean - indep) > 5.0 * se);
}

TEST_CASE("mu_T: closed forms and monotonicity") {
    CHECK(mu_T(1.0, 0.0, 1.0, 0.0, 0.7, NoiseCoupling::Independent) ==
          doctest::Approx(1.2974425414002564).epsilon(1e-10));
    CHECK(mu_T(40.0, 1.0, 0.0, 0.0, 0.7, NoiseCoupling::Independent) ==
          doctest::Approx(1.0).epsilon(1e-8));
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const double cur = mu_T(t, 0.3, 0.4, 0.4, 0.7, NoiseCoupling::Independent);
        CHECK(cur > prev);
        prev = cur;
    }
    prev = 0.0;
    for (double rho : {0.1, 0.4, 0.8}) {
        const double cur = mu_T(1.0, 0.3, rho, rho, 0.7, NoiseCoupling::Independent);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("concentration bound: direct substitution and clamping") {
    // M^2 = 2 rho1^2 T = 4 with rho1 = sqrt(2), T = 1, rho2 = 0
    TailBoundInput in;
    in.horizon = 1.0;
    in.rho1 = std::sqrt(2.0);
    in.rho2 = 0.0;
    in.drift_a = 0.5;
    in.hurst = 0.7;
    in.coupling = NoiseCoupling::Independent;
    const double mu = mu_T(in.horizon, in.drift_a, in.rho1, in.rho2, in.hurst, in.coupling);

    in.threshold = std::exp(1.0) * mu;  // ln gap = 1; bound 2 e^{-1/8} > 1 -> clamp
    auto bv = tail_bound_concentration(in);
    REQUIRE(bv.applicable());
    CHECK(*bv.value == 1.0);

    in.threshold = std::exp(4.0) * mu;  // bound = 2 e^{-16/8} = 2 e^{-2}
    bv = tail_bound_concentration(in);
    REQUIRE(bv.applicable());
    CHECK(*bv.value == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-10));

    // the literal-denominator variant uses 2 (M^2)^2 = 32; at ln gap 4 it
    // still clamps, at ln gap 8 the two variants separate cleanly
    auto lit = tail_bound_concentration(in, true);
    REQUIRE(lit.applicable());
    CHECK(*lit.value == 1.0);  // 2 e^{-1/2} > 1
    in.threshold = std::exp(8.0) * mu;
    bv = tail_bound_concentration(in);
    lit = tail_bound_concentration(in, true);
    CHECK(*bv.value == doctest::Approx(2.0 * std::exp(-8.0)).epsilon(1e-10));
    CHECK(*lit.value == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-10));

    in.threshold = 0.5 * mu;  // hypothesis fails
    CHECK_FALSE(tail_bound_concentration(in).applicable());
}

TEST_CASE("concentration bound: monotone nonincreasing in the threshold") {
    TailBoundInput in;
    in.horizon = 1.0;
    in.rho1 = 0.4;
    in.rho2 = 0.4;
    in.drift_a = 0.1;
    in.hurst = 0.7;
    const double mu = mu_T(1.0, 0.1, 0.4, 0.4, 0.7, NoiseCoupling::Independent);
    double prev = 2.0;
    for (double factor : {1.5, 2.0, 4.0, 10.0}) {
        in.threshold = factor * mu;
        const auto bv = tail_bound_concentration(in);
        REQUIRE(bv.applicable());
        CHECK(*bv.value <= prev);
        prev = *bv.value;
    }
}

TEST_CASE("markov bound: independent closed form with zero integrand drift") {
    // lambda = 1, k = [[1,0],[1,0]], gamma_i = lambda + k^2 = 1.5 => a = 0,
    // rho = (1, 0); bound = (E0/2) * 2 (e^{T/2} - 1) = E0 (sqrt(e) - 1) at T = 1
    SystemParams p;
    p.beta1 = p.beta2 = 1.0;
    p.k << 1.0, 0.0, 1.0, 0.0;
    p.gamma1 = p.gamma2 = 1.5;
    p.hurst = 0.7;
    p.domain_length = kPi;
    p.initial = EigenMultipleData{1.0, 1.0};
    const DerivedConstants consts = derive_constants(p);
    REQUIRE(consts.rho.has_value());
    CHECK((*consts.rho)[0] == doctest::Approx(1.0));
    CHECK(consts.a == doctest::Approx(0.0));

    const auto bv = tail_bound_markov(p, consts, BetaCase::EqualBeta, 1.0);
    REQUIRE(bv.applicable());
    const double e0 = kPi / 4.0;
    CHECK(*bv.value == doctest::Approx(e0 * (std::exp(0.5) - 1.0)).epsilon(1e-9));
}

TEST_CASE("markov bound: dependent case, removable singularity, hypothesis") {
    SystemParams p = test_support::coupled_system(0.5, 1.0, 1.0);
    p.coupling = NoiseCoupling::VolterraDependent;
    const DerivedConstants consts = derive_constants(p);
    // rho1^2 = 0.25 > a = 0: hypothesis holds; bound finite and positive
    const auto bv = tail_bound_markov(p, consts, BetaCase::EqualBeta, 1.0);
    REQUIRE(bv.applicable());
    CHECK(*bv.value > 0.0);
    CHECK(*bv.value <= 1.0);

    // rho1^2 + d == 0 exactly: the (e^{xT}-1)/x factor degenerates to T; build
    // a variant where the drift cancels rho1^2
    SystemParams q = p;
    q.gamma1 = q.gamma2 = 1.0 + 0.5 * 0.5 / 2.0 - 0.25;  // a = beta (lambda-gamma+k^2) = 0.25
    const DerivedConstants qc = derive_constants(q);
    CHECK(qc.a == doctest::Approx(0.25));
    const auto qv = tail_bound_markov(q, qc, BetaCase::EqualBeta, 1.0);
    CHECK_FALSE(qv.applicable());  // rho1^2 = a: hypothesis is strict
}

TEST_CASE("L(alpha): deterministic oracle at rho = 0") {
    // k = 0, gamma = 0.5 => a = 0.5; C1 = C2 = 1.5 => U = 16/(3 pi) < 1/a,
    // so the ratio exceeds 1 at an interior time
    SystemParams p;
    p.beta1 = p.beta2 = 1.0;
    p.k.setZero();
    p.gamma1 = p.gamma2 = 0.5;
    p.hurst = 0.7;
    p.domain_length = kPi;
    p.initial = EigenMultipleData{1.5, 1.5};
    const DerivedConstants consts = derive_constants(p);
    CHECK(consts.a == doctest::Approx(0.5));
    CHECK(*consts.theta_u1 == doctest::Approx(16.0 / (3.0 * kPi)).epsilon(1e-14));

    LAlphaControls ctl;
    ctl.n_paths = 8;
    ctl.t_max = 20.0;
    ctl.n_steps = 2000;
    const LAlphaEstimate est = estimate_L_alpha(p, consts, 1.2, BetaCase::EqualBeta, ctl);
    CHECK(est.value == doctest::Approx(1.0076640430845798).epsilon(1e-3));
    CHECK(est.std_error == doctest::Approx(0.0));
    CHECK(est.value_2tmax >= 1.0);
}

TEST_CASE("L(alpha): clamped at one and alpha > H enforced") {
    const SystemParams p = test_support::coupled_system(0.4, 1.0, 1.0);
    const DerivedConstants consts = derive_constants(p);
    LAlphaControls ctl;
    ctl.n_paths = 64;
    ctl.t_max = 5.0;
    ctl.n_steps = 200;
    const LAlphaEstimate est = estimate_L_alpha(p, consts, 1.1, BetaCase::EqualBeta, ctl);
    CHECK(est.value >= 1.0);
    CHECK_THROWS_AS(estimate_L_alpha(p, consts, 0.6, BetaCase::EqualBeta, ctl), ConfigError);
}

TEST_CASE("malliavin lower bound: frozen oracle, limits") {
    const SystemParams p = test_support::coupled_system(0.4, 2.0, 2.0);
    const DerivedConstants consts = derive_constants(p);
    REQUIRE(*consts.theta_u1 == doctest::Approx(4.0 / kPi).epsilon(1e-14));
    // re-evaluation oracle (computed independently): rho = (0.4, 0.4), H = 0.7,
    // U = 4/pi, alpha = 1.2, L = 1.35
    CHECK(lower_bound_malliavin(p, consts, 1.2, BetaCase::EqualBeta, 1.35) ==
          doctest::Approx(0.27024149933538655).epsilon(1e-12));
    // L = 1: vanishing numerator
    CHECK(lower_bound_malliavin(p, consts, 1.2, BetaCase::EqualBeta, 1.0) == 0.0);

    // rho1 = 0 limit: denominator reduces to the rho2 term only
    SystemParams q;
    q.beta1 = q.beta2 = 1.0;
    q.k << 0.0, 0.4, 0.0, 0.4;
    q.gamma1 = q.gamma2 = 1.0;
    q.hurst = 0.7;
    q.domain_length = kPi;
    q.initial = EigenMultipleData{2.0, 2.0};
    const DerivedConstants qc = derive_constants(q);
    REQUIRE(qc.rho.has_value());
    CHECK((*qc.rho)[0] == 0.0);
    CHECK(lower_bound_malliavin(q, qc, 1.2, BetaCase::EqualBeta, 1.35) ==
          doctest::Approx(0.4902384473728165).epsilon(1e-12));
    CHECK(lower_bound_malliavin(q, qc, 1.2, BetaCase::EqualBeta, 2.0) <= 1.0);
}

TEST_CASE("gamma law: variants, limits, hypothesis checking") {
    GammaLawInput in;
    in.rho = 1.0;
    in.drift_a = 1.0;  // nu = 2
    in.threshold = 1.0;
    const GammaLawBounds g = gamma_law_lower_bound(in);
    // derived: P(Z_2 < 2/(rho^2 theta)) = P(2, 2) = 1 - 3 e^{-2}
    CHECK(g.derived == doctest::Approx(0.5939941502901619).epsilon(1e-12));
    // printed: P(2, nu * 2 / theta) = P(2, 4)
    CHECK(g.printed == doctest::Approx(reg_lower_inc_gamma(2.0, 4.0)).epsilon(1e-12));
    CHECK(g.discrepancy == doctest::Approx(std::abs(g.printed - g.derived)));

    in.threshold = 1e12;  // theta -> infinity: both variants vanish
    const GammaLawBounds big = gamma_law_lower_bound(in);
    CHECK(big.derived <= 1e-10);
    CHECK(big.printed <= 1e-10);

    CHECK_THROWS_AS(gamma_law_lower_bound(GammaLawInput{0.0, 1.0, 1.0}), NumericalError);
    CHECK_THROWS_AS(gamma_law_lower_bound(GammaLawInput{1.0, -1.0, 1.0}), NumericalError);

    // hypothesis checks route through params
    SystemParams p = test_support::coupled_system(1.0, 2.0, 2.0, 0.8);
    p.gamma1 = p.gamma2 = 1.2;
    CHECK(gamma_law_hypothesis_issue(p, derive_constants(p)).empty());
    p.hurst = 0.7;
    CHECK_FALSE(gamma_law_hypothesis_issue(p, derive_constants(p)).empty());
    p.hurst = 0.8;
    p.coupling = NoiseCoupling::VolterraDependent;
    CHECK_FALSE(gamma_law_hypothesis_issue(p, derive_constants(p)).empty());
}

TEST_CASE("gamma law derived variant matches truncated-functional Monte Carlo") {
    // nu in {1, 2}: samples of int_0^T e^{rho B - a s} ds vs P(Z_nu < 2/(rho^2 theta)),
    // T sized so the truncation tail is inside the tolerance
    for (double nu : {1.0, 2.0}) {
        const double rho = 2.0;
        const double a = nu * rho * rho / 2.0;
        const double theta = 0.5;
        const double want = reg_lower_inc_gamma(nu, 2.0 / (rho * rho * theta));

        const int n_paths = 30000, n_steps = 4096;
        const double t_max = 40.0, dt = t_max / n_steps, sd = std::sqrt(dt);
        int crossed = 0;
        for (int i = 0; i < n_paths; ++i) {
            Rng rng = Rng::for_path(nu == 1.0 ? 901 : 902, i);
            double b = 0.0, prev = 1.0, acc = 0.0;
            for (int j = 1; j <= n_steps && acc < theta; ++j) {
                b += sd * rng.normal();
                const double cur = std::exp(rho * b - a * j * dt);
                acc += 0.5 * dt * (prev + cur);
                prev = cur;
            }
            if (acc >= theta) ++crossed;
        }
        const double p_hat = static_cast<double>(crossed) / n_paths;
        const double se = std::sqrt(p_hat * (1.0 - p_hat) / n_paths);
        INFO("nu = ", nu, ": p_hat = ", p_hat, " want ", want);
        CHECK(std::abs(p_hat - want) <= 3.0 * se + 2e-3);
    }
}

TEST_CASE("make_tail_input wires the right constants per beta case") {
    const SystemParams p = test_support::coupled_system(0.3, 1.0, 1.0);
    const DerivedConstants consts = derive_constants(p);
    const TailBoundInput in = make_tail_input(p, consts, BetaCase::EqualBeta, 2.0);
    CHECK(in.horizon == 2.0);
    CHECK(in.rho1 == doctest::Approx(0.3));
    CHECK(in.threshold == doctest::Approx(*consts.theta_u1));
    CHECK(in.drift_a == doctest::Approx(consts.a));
    CHECK_THROWS_AS(make_tail_input(p, consts, BetaCase::StrictBeta, 1.0), ConfigError);
}
