#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "blowlab/checks.hpp"
#include "blowlab/common.hpp"
#include "blowlab/mc.hpp"
#include "test_support.hpp"

using namespace blowlab;
using test_support::kPi;

TEST_CASE("aggregate: probabilities and times") {
    const Statistic p = aggregate_probability(50, 100);
    CHECK(p.mean == doctest::Approx(0.5));
    CHECK(p.std_error == doctest::Approx(0.5 / std::sqrt(100.0)).epsilon(1e-14));
    CHECK(p.ci_hi - p.ci_lo == doctest::Approx(2.0 * 1.96 * p.std_error).epsilon(1e-12));

    const Statistic t = aggregate_times({1.0, 2.0, 3.0});
    CHECK(t.mean == doctest::Approx(2.0));
    CHECK(t.sd == doctest::Approx(1.0));

    const Statistic all2 = aggregate_times({2.0, 2.0, 2.0, 2.0});
    CHECK(all2.mean == doctest::Approx(2.0));
    CHECK(all2.sd == doctest::Approx(0.0));

    CHECK_THROWS_AS(aggregate_probability(0, 0), NumericalError);
}

TEST_CASE("degenerate campaign: n_paths = 1, zero noise reproduces the tau values") {
    CampaignSpec spec;
    spec.name = "degenerate";
    spec.params = test_support::coupled_system(0.0, 1.0, 1.0);
    spec.grid = TimeGrid(4.0, 1024);
    spec.n_paths = 1;
    spec.master_seed = 1;
    spec.pipelines = {Pipeline::LowerStar, Pipeline::Upper1};
    const CampaignReport report = run_campaign(spec, 1);

    const auto& lower = report.pipelines.at("lower_star");
    CHECK(lower.probability.mean == 1.0);
    CHECK(lower.time.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lower.time.sd == 0.0);
    const auto& upper = report.pipelines.at("upper_1");
    CHECK(upper.time.mean == doctest::Approx(8.0 / kPi).epsilon(1e-12));
    CHECK(upper.n_violations == 0);
}

TEST_CASE("deterministic crossing: P(tau_1 <= T) is exactly the indicator") {
    CampaignSpec spec;
    spec.params = test_support::coupled_system(0.0, 1.0, 1.0);
    spec.grid = TimeGrid(4.0, 512);
    spec.n_paths = 16;
    spec.master_seed = 3;
    spec.pipelines = {Pipeline::TailBounds};
    // tau_1^* = 8/pi ~ 2.546 deterministically
    spec.tail_horizon = 2.0;
    CHECK(run_campaign(spec, 2).pipelines.at("tail_bounds").probability.mean == 0.0);
    spec.tail_horizon = 3.0;
    CHECK(run_campaign(spec, 2).pipelines.at("tail_bounds").probability.mean == 1.0);
}

TEST_CASE("worker-count independence: byte-identical reports") {
    CampaignSpec spec;
    spec.name = "det";
    spec.params = checks::sandwich_params();
    spec.grid = TimeGrid(6.0, 256);
    spec.n_paths = 96;
    spec.master_seed = 17;
    spec.tail_horizon = 4.0;
    spec.pipelines = {Pipeline::LowerStar, Pipeline::Upper1, Pipeline::TailBounds,
                      Pipeline::MalliavinLower};
    const auto res = checks::determinism(spec, {1, 2, 3, 7});
    INFO(res.detail);
    CHECK(res.pass);
}

TEST_CASE("campaign_path: reproducible streams, matches the campaign draws") {
    CampaignSpec spec;
    spec.params = checks::sandwich_params();
    spec.grid = TimeGrid(2.0, 128);
    spec.n_paths = 4;
    spec.master_seed = 5;
    const SamplePath a = campaign_path(spec, 2);
    const SamplePath b = campaign_path(spec, 2);
    const SamplePath c = campaign_path(spec, 3);
    CHECK((a.w == b.w).all());
    CHECK((a.bh == b.bh).all());
    CHECK_FALSE((a.w == c.w).all());
    CHECK(a.w[0] == 0.0);
    CHECK(a.bh[0] == 0.0);
}

TEST_CASE("volterra-coupled campaign paths share the driving Brownian motion") {
    CampaignSpec spec;
    spec.params = checks::tail_params_dependent();
    spec.grid = TimeGrid(1.0, 128);
    spec.n_paths = 2;
    spec.master_seed = 9;
    const SamplePath path = campaign_path(spec, 0);
    CHECK(path.coupling == NoiseCoupling::VolterraDependent);
    // reconstruct B^H from the W increments through the public sampler
    const VolterraSampler vs(spec.grid, spec.params.hurst);
    Eigen::ArrayXd dw(128);
    for (int j = 0; j < 128; ++j) dw[j] = path.w[j + 1] - path.w[j];
    const Eigen::ArrayXd bh = vs.sample_from_increments(dw);
    CHECK(((path.bh - bh).abs() <= 1e-12).all());
}

TEST_CASE("strict-beta campaign: upper_2 and tail bounds wire the N threshold") {
    SystemParams p;
    p.beta1 = 2.0;
    p.beta2 = 1.0;
    const double ratio = (2.0 + p.beta1) / (2.0 + p.beta2);
    p.k << 0.2 * ratio, 0.2 * ratio, 0.2, 0.2;
    p.gamma1 = 1.0 + p.k(0, 0) * p.k(0, 0) / 2.0;
    p.gamma2 = 1.0 + p.k(1, 0) * p.k(1, 0) / 2.0;
    p.hurst = 0.7;
    p.domain_length = kPi;
    p.initial = EigenMultipleData{3.0, 3.0};

    CampaignSpec spec;
    spec.name = "strict";
    spec.params = p;
    spec.grid = TimeGrid(8.0, 512);
    spec.n_paths = 200;
    spec.master_seed = 12;
    spec.tail_horizon = 8.0;
    spec.pipelines = {Pipeline::LowerStar, Pipeline::Upper2, Pipeline::TailBounds};
    const CampaignReport report = run_campaign(spec, 2);

    const DerivedConstants consts = derive_constants(p);
    REQUIRE(consts.theta_u2.has_value());
    const auto& u2 = report.pipelines.at("upper_2");
    CHECK(u2.analytic.at("theta_u2") == doctest::Approx(*consts.theta_u2));
    CHECK(u2.n_violations == 0);  // tau_* <= tau_2^* pathwise
    const auto& tails = report.pipelines.at("tail_bounds");
    CHECK(tails.analytic.count("markov_bound") == 1);
    CHECK(tails.probability.mean >= 0.0);
}

TEST_CASE("campaign rejects inapplicable pipelines with config errors") {
    CampaignSpec spec;
    spec.params = test_support::coupled_system(0.3, 1.0, 1.0);  // equal betas
    spec.grid = TimeGrid(2.0, 64);
    spec.n_paths = 4;
    spec.pipelines = {Pipeline::Upper2};
    CHECK_THROWS_AS(run_campaign(spec, 1), ConfigError);

    spec.pipelines = {Pipeline::PdeSandwich};  // no mesh
    CHECK_THROWS_AS(run_campaign(spec, 1), ConfigError);

    spec.pipelines = {Pipeline::TailBounds};
    spec.tail_horizon = 5.0;  // beyond the grid horizon
    CHECK_THROWS_AS(run_campaign(spec, 1), ConfigError);

    spec.pipelines = {Pipeline::GammaLaw};  // H = 0.7 < 3/4
    spec.tail_horizon = 1.0;
    CHECK_THROWS_AS(run_campaign(spec, 1), ConfigError);

    SystemParams broken = checks::ordering_params();  // no coupling condition
    spec.params = broken;
    spec.pipelines = {Pipeline::LowerStar};
    CHECK_THROWS_AS(run_campaign(spec, 1), ConfigError);
}

TEST_CASE("per-path records CSV: stable header and row count") {
    CampaignSpec spec;
    spec.name = "records";
    spec.params = checks::sandwich_params();
    spec.grid = TimeGrid(6.0, 128);
    spec.n_paths = 8;
    spec.master_seed = 21;
    spec.pipelines = {Pipeline::LowerStar, Pipeline::Upper1};
    const CampaignReport report = run_campaign(spec, 2);
    std::ostringstream os;
    report.write_records_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "seed,tau_star,tau_upper,upper_kind,t_blow,censored_star,censored_upper,"
          "saturated_star,saturated_upper");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 8);
}

TEST_CASE("report serialization: json carries pipeline stats and metadata") {
    CampaignSpec spec;
    spec.name = "meta";
    spec.params = checks::sandwich_params();
    spec.grid = TimeGrid(6.0, 128);
    spec.n_paths = 4;
    spec.master_seed = 33;
    spec.pipelines = {Pipeline::LowerStar};
    const CampaignReport report = run_campaign(spec, 1);
    const std::string json = report.to_json();
    CHECK(json.find("\"name\": \"meta\"") != std::string::npos);
    CHECK(json.find("\"master_seed\": 33") != std::string::npos);
    CHECK(json.find("lower_star") != std::string::npos);
    CHECK(json.find("theta_lower") != std::string::npos);

    std::ostringstream csv;
    report.write_csv_summary(csv);
    CHECK(csv.str().rfind("campaign,pipeline,metric,value\n", 0) == 0);
}

TEST_CASE("SE formulas match a brute-force recomputation from the records") {
    CampaignSpec spec;
    spec.params = checks::sandwich_params();
    spec.grid = TimeGrid(6.0, 256);
    spec.n_paths = 200;
    spec.master_seed = 71;
    spec.pipelines = {Pipeline::LowerStar};
    const CampaignReport report = run_campaign(spec, 2);
    int crossed = 0;
    for (const auto& rec : report.records)
        if (rec.tau_star && !rec.tau_star->censored) ++crossed;
    const double p_hat = static_cast<double>(crossed) / spec.n_paths;
    const auto& st = report.pipelines.at("lower_star");
    CHECK(st.probability.mean == doctest::Approx(p_hat).epsilon(1e-15));
    CHECK(st.probability.std_error ==
          doctest::Approx(std::sqrt(p_hat * (1.0 - p_hat) / spec.n_paths)).epsilon(1e-12));
}
