#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blowlab/checks.hpp"
#include "blowlab/common.hpp"
#include "blowlab/stopping.hpp"
#include "test_support.hpp"

using namespace blowlab;
using test_support::kPi;
using test_support::zero_path;

TEST_CASE("cumulative functional: unit integrand is exact on the grid") {
    const SamplePath path = zero_path(TimeGrid(2.0, 100));
    const auto cum = cumulative_exp_functional(path, ExpFunctionalSpec{});
    CHECK_FALSE(cum.saturated);
    CHECK(cum.values[0] == 0.0);
    for (int j = 0; j <= 100; ++j)
        CHECK(cum.values[j] == doctest::Approx(j * 0.02).epsilon(1e-14));
}

TEST_CASE("cumulative functional: pure drift matches the analytic integral") {
    const SamplePath path = zero_path(TimeGrid(2.0, 2000));
    ExpFunctionalSpec spec;
    spec.drift = -1.0;
    const auto cum = cumulative_exp_functional(path, spec);
    for (int j : {100, 500, 1000, 2000}) {
        const double t = path.grid.time(j);
        CHECK(cum.values[j] == doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-6));
    }
}

TEST_CASE("cumulative functional: min of identical specs equals single") {
    SamplePath path = zero_path(TimeGrid(1.0, 64));
    Rng rng(1, 1);
    for (int j = 1; j <= 64; ++j) {
        path.w[j] = path.w[j - 1] + 0.1 * rng.normal();
        path.bh[j] = path.bh[j - 1] + 0.1 * rng.normal();
    }
    ExpFunctionalSpec single;
    single.rho_w = 0.7;
    single.rho_bh = -0.2;
    single.drift = 0.3;
    ExpFunctionalSpec twin = single;
    twin.combine = ExpFunctionalSpec::Combine::MinOfTwo;
    twin.rho_w2 = single.rho_w;
    twin.rho_bh2 = single.rho_bh;
    twin.drift2 = single.drift;
    const auto a = cumulative_exp_functional(path, single);
    const auto b = cumulative_exp_functional(path, twin);
    CHECK((a.values == b.values).all());
}

TEST_CASE("cumulative functional: saturation clamps and flags, stays monotone") {
    SamplePath path = zero_path(TimeGrid(1.0, 16));
    path.w.setLinSpaced(17, 0.0, 2000.0);
    ExpFunctionalSpec spec;
    spec.rho_w = 1.0;
    const auto cum = cumulative_exp_functional(path, spec);
    CHECK(cum.saturated);
    for (int j = 1; j <= 16; ++j) CHECK(cum.values[j] >= cum.values[j - 1]);
    CHECK(std::isfinite(cum.values[16]));
}

TEST_CASE("first crossing: interpolation, censoring, domain") {
    const TimeGrid grid(2.0, 100);
    const SamplePath path = zero_path(grid);
    const auto cum = cumulative_exp_functional(path, ExpFunctionalSpec{});

    const StoppingEstimate hit = first_crossing(cum.values, grid, 1.0);
    REQUIRE(hit.crossed());
    CHECK(hit.t_hat == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hit.bracket_hi == hit.bracket_lo + 1);

    const StoppingEstimate miss = first_crossing(cum.values, grid, 2.5);
    CHECK_FALSE(miss.crossed());
    CHECK(miss.t_hat == 2.0);
    CHECK(miss.value_at_horizon == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(miss.time_or_inf() == std::numeric_limits<double>::infinity());

    CHECK_THROWS_AS(first_crossing(cum.values, grid, 0.0), NumericalError);
}

TEST_CASE("first crossing: closed-form inverse for the drifted integrand") {
    const SamplePath path = zero_path(TimeGrid(2.0, 2000));
    ExpFunctionalSpec spec;
    spec.drift = -1.0;
    const auto cum = cumulative_exp_functional(path, spec);
    const StoppingEstimate est = first_crossing(cum.values, path.grid, 0.5);
    REQUIRE(est.crossed());
    CHECK(est.t_hat == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("first crossing: monotone in the threshold") {
    SamplePath path = zero_path(TimeGrid(3.0, 512));
    Rng rng(12, 0);
    for (int j = 1; j <= 512; ++j) path.w[j] = path.w[j - 1] + 0.2 * rng.normal();
    ExpFunctionalSpec spec;
    spec.rho_w = 1.0;
    const auto cum = cumulative_exp_functional(path, spec);
    double prev = -1.0;
    for (double theta : {0.1, 0.5, 1.0, 2.0, 2.9}) {
        const auto est = first_crossing(cum.values, path.grid, theta);
        const double t = est.time_or_inf();
        CHECK(t >= prev);
        prev = t;
    }
}

TEST_CASE("degenerate deterministic system: tau_* = 2 and tau_1^* = 8/pi") {
    SystemParams p = test_support::coupled_system(0.0, 1.0, 1.0);
    const DerivedConstants consts = derive_constants(p);
    const SamplePath path = zero_path(TimeGrid(4.0, 1024));

    const StoppingEstimate star = tau_lower_star(path, p, consts);
    REQUIRE(star.crossed());
    CHECK(star.t_hat == doctest::Approx(2.0).epsilon(1e-12));

    const StoppingEstimate u1 = tau_upper_1(path, p, consts);
    REQUIRE(u1.crossed());
    CHECK(u1.t_hat == doctest::Approx(8.0 / kPi).epsilon(1e-12));
    CHECK(star.t_hat <= u1.t_hat);
}

TEST_CASE("pathwise sandwich: tau_* <= tau_1^* over random seeds") {
    SystemParams p = test_support::coupled_system(0.5, 1.0, 1.3);
    const DerivedConstants consts = derive_constants(p);
    const TimeGrid grid(10.0, 512);
    const FbmSampler sampler(grid, p.hurst);
    int crossed_both = 0;
    for (int i = 0; i < 200; ++i) {
        Rng rng = Rng::for_path(555, i);
        SamplePath path;
        path.grid = grid;
        path.hurst = p.hurst;
        path.w = sample_bm(grid, rng);
        path.bh = sampler.sample(rng);
        const auto star = tau_lower_star(path, p, consts);
        const auto u1 = tau_upper_1(path, p, consts);
        CHECK(star.time_or_inf() <= u1.time_or_inf());
        if (star.crossed() && u1.crossed()) ++crossed_both;
    }
    CHECK(crossed_both > 100);  // the check must actually bite
}

TEST_CASE("strict-beta bounds: tau_* <= tau_2^* and preconditions") {
    SystemParams p;
    p.beta1 = 2.0;
    p.beta2 = 1.0;
    const double ratio = (2.0 + p.beta1) / (2.0 + p.beta2);  // coupling-consistent k
    const double k21 = 0.2, k22 = 0.2;
    p.k << k21 * ratio, k22 * ratio, k21, k22;
    p.gamma1 = 1.0 + p.k(0, 0) * p.k(0, 0) / 2.0;
    p.gamma2 = 1.0 + p.k(1, 0) * p.k(1, 0) / 2.0;
    p.hurst = 0.7;
    p.domain_length = kPi;
    p.initial = EigenMultipleData{3.0, 3.0};
    const DerivedConstants consts = derive_constants(p);
    REQUIRE(consts.rho.has_value());
    REQUIRE(consts.mass_condition);
    REQUIRE(consts.theta_u2.has_value());

    const TimeGrid grid(12.0, 512);
    const FbmSampler sampler(grid, p.hurst);
    for (int i = 0; i < 100; ++i) {
        Rng rng = Rng::for_path(77, i);
        SamplePath path;
        path.grid = grid;
        path.hurst = p.hurst;
        path.w = sample_bm(grid, rng);
        path.bh = sampler.sample(rng);
        const auto star = tau_lower_star(path, p, consts);
        const auto u2 = tau_upper_2(path, p, consts);
        CHECK(star.time_or_inf() <= u2.time_or_inf());
    }

    CHECK_THROWS_AS(tau_upper_1(zero_path(grid), p, consts), ConfigError);
    SystemParams equal = test_support::coupled_system(0.1, 1.0, 1.0);
    CHECK_THROWS_AS(tau_upper_2(zero_path(grid), equal, derive_constants(equal)), ConfigError);
}

TEST_CASE("tau_double_star reduces to the tau_* crossing under the coupling condition") {
    SystemParams p = test_support::coupled_system(0.35, 1.0, 1.4);
    const DerivedConstants consts = derive_constants(p);
    const TimeGrid grid(8.0, 512);
    const FbmSampler sampler(grid, p.hurst);
    for (int i = 0; i < 50; ++i) {
        Rng rng = Rng::for_path(31, i);
        SamplePath path;
        path.grid = grid;
        path.hurst = p.hurst;
        path.w = sample_bm(grid, rng);
        path.bh = sampler.sample(rng);
        const auto star = tau_lower_star(path, p, consts);
        const auto dd = tau_double_star(path, p, consts);
        CHECK(star.crossed() == dd.crossed());
        if (star.crossed()) CHECK(star.t_hat == doctest::Approx(dd.t_hat).epsilon(1e-12));
    }
}

TEST_CASE("tau_prime <= tau_double_star pathwise (general case)") {
    const SystemParams p = checks::ordering_params();
    const DerivedConstants consts = derive_constants(p);
    const TimeGrid grid(10.0, 512);
    const FbmSampler sampler(grid, p.hurst);
    for (int i = 0; i < 200; ++i) {
        Rng rng = Rng::for_path(404, i);
        SamplePath path;
        path.grid = grid;
        path.hurst = p.hurst;
        path.w = sample_bm(grid, rng);
        path.bh = sampler.sample(rng);
        const auto prime = tau_prime(path, p, consts);
        const auto dd = tau_double_star(path, p, consts);
        CHECK(prime.time_or_inf() <= dd.time_or_inf());
    }
}

TEST_CASE("tau_upper_general: min-integrand crossing bounded by tau_upper_1") {
    // with the coupling condition the two integrands coincide, so the general
    // upper bound equals tau_1^*
    SystemParams p = test_support::coupled_system(0.45, 1.0, 1.0);
    const DerivedConstants consts = derive_constants(p);
    const TimeGrid grid(8.0, 512);
    const FbmSampler sampler(grid, p.hurst);
    for (int i = 0; i < 50; ++i) {
        Rng rng = Rng::for_path(88, i);
        SamplePath path;
        path.grid = grid;
        path.hurst = p.hurst;
        path.w = sample_bm(grid, rng);
        path.bh = sampler.sample(rng);
        const auto ug = tau_upper_general(path, p, consts, BetaCase::EqualBeta);
        const auto u1 = tau_upper_1(path, p, consts);
        CHECK(ug.crossed() == u1.crossed());
        if (ug.crossed()) CHECK(ug.t_hat == doctest::Approx(u1.t_hat).epsilon(1e-12));
    }
}

TEST_CASE("grid refinement: crossing times converge as dt halves") {
    // same Brownian path read on nested grids: coarse values are the fine
    // ones restricted, so the crossing time moves by O(dt)
    const SystemParams p = test_support::coupled_system(0.4, 2.0, 2.0);
    const DerivedConstants consts = derive_constants(p);
    const int n_fine = 4096;
    const TimeGrid fine(8.0, n_fine);
    SamplePath path;
    path.grid = fine;
    path.hurst = p.hurst;
    {
        Rng rng = Rng::for_path(2718, 0);
        path.w = sample_bm(fine, rng);
        path.bh = sample_fbm(fine, p.hurst, rng);
    }
    double prev_t = -1.0, prev_diff = 1e9;
    for (int level = 0; level < 4; ++level) {
        const int stride = 8 >> level;
        const int n = n_fine / stride;
        SamplePath sub;
        sub.grid = TimeGrid(8.0, n);
        sub.hurst = p.hurst;
        sub.w.resize(n + 1);
        sub.bh.resize(n + 1);
        for (int j = 0; j <= n; ++j) {
            sub.w[j] = path.w[j * stride];
            sub.bh[j] = path.bh[j * stride];
        }
        const auto est = tau_lower_star(sub, p, consts);
        REQUIRE(est.crossed());
        if (level > 0) {
            const double diff = std::abs(est.t_hat - prev_t);
            CHECK(diff <= std::max(2.0 * prev_diff, 4.0 * sub.grid.dt()));
            prev_diff = diff;
        }
        prev_t = est.t_hat;
    }
}

TEST_CASE("tau ops enforce their hypotheses") {
    SystemParams p = test_support::coupled_system(0.3, 1.0, 1.0);
    p.gamma1 = 5.0;  // breaks gamma_i = lambda + k_i1^2/2
    const DerivedConstants consts = derive_constants(p);
    const SamplePath path = zero_path(TimeGrid(2.0, 16));
    CHECK_THROWS_AS(tau_lower_star(path, p, consts), ConfigError);
    CHECK_THROWS_AS(tau_double_star(path, p, consts), ConfigError);
    CHECK_THROWS_AS(tau_prime(path, p, consts), ConfigError);

    SystemParams q = checks::ordering_params();  // coupling condition fails
    const DerivedConstants qc = derive_constants(q);
    CHECK_THROWS_AS(tau_lower_star(path, q, qc), ConfigError);
}
