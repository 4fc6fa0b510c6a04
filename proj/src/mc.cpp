#include "blowlab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "blowlab/common.hpp"
#include "blowlab/report.hpp"

namespace blowlab {

const char* pipeline_name(Pipeline p) {
    switch (p) {
        case Pipeline::LowerStar: return "lower_star";
        case Pipeline::Upper1: return "upper_1";
        case Pipeline::Upper2: return "upper_2";
        case Pipeline::DoubleStar: return "double_star";
        case Pipeline::Prime: return "prime";
        case Pipeline::UpperGeneral: return "upper_general";
        case Pipeline::PdeSandwich: return "pde_sandwich";
        case Pipeline::TailBounds: return "tail_bounds";
        case Pipeline::GammaLaw: return "gamma_law";
        case Pipeline::MalliavinLower: return "malliavin_lower";
    }
    return "?";
}

std::optional<Pipeline> pipeline_from_name(const std::string& name) {
    static const std::pair<const char*, Pipeline> table[] = {
        {"lower_star", Pipeline::LowerStar},   {"upper_1", Pipeline::Upper1},
        {"upper_2", Pipeline::Upper2},         {"double_star", Pipeline::DoubleStar},
        {"prime", Pipeline::Prime},            {"upper_general", Pipeline::UpperGeneral},
        {"pde_sandwich", Pipeline::PdeSandwich}, {"tail_bounds", Pipeline::TailBounds},
        {"gamma_law", Pipeline::GammaLaw},     {"malliavin_lower", Pipeline::MalliavinLower}};
    for (const auto& [n, p] : table)
        if (name == n) return p;
    return std::nullopt;
}

void CampaignSpec::check_applicability(const DerivedConstants& consts) const {
    auto fail = [](const std::string& what) { throw ConfigError("campaign: " + what); };
    const bool eigen_data = std::holds_alternative<EigenMultipleData>(params.initial);
    for (Pipeline p : pipelines) {
        switch (p) {
            case Pipeline::LowerStar:
                if (!consts.rho) fail("lower_star needs the coupling condition");
                if (!consts.gamma_matches_eigen)
                    fail("lower_star needs gamma_i = lambda + k_i1^2/2");
                if (!eigen_data) fail("lower_star needs eigen-multiple initial data");
                break;
            case Pipeline::Upper1:
                if (!params.equal_betas()) fail("upper_1 needs beta1 == beta2");
                if (!consts.rho) fail("upper_1 needs the coupling condition");
                if (!consts.theta_u1) fail("upper_1 needs E(0) > 0");
                break;
            case Pipeline::Upper2:
                if (!(params.beta1 > params.beta2)) fail("upper_2 needs beta1 > beta2");
                if (!consts.rho) fail("upper_2 needs the coupling condition");
                if (!consts.theta_u2) fail("upper_2: mass condition fails, bound unavailable");
                break;
            case Pipeline::DoubleStar:
            case Pipeline::Prime:
                if (!consts.gamma_matches_eigen)
                    fail("double_star/prime need gamma_i = lambda + k_i1^2/2");
                if (!eigen_data) fail("double_star/prime need eigen-multiple initial data");
                break;
            case Pipeline::UpperGeneral:
                if (params.equal_betas()) {
                    if (!consts.theta_u1) fail("upper_general needs E(0) > 0");
                } else if (!consts.theta_u2) {
                    fail("upper_general: mass condition fails, bound unavailable");
                }
                break;
            case Pipeline::PdeSandwich:
                if (!mesh) fail("pde_sandwich needs a spatial mesh");
                if (!params.equal_betas()) fail("pde_sandwich needs beta1 == beta2");
                if (!consts.rho || !consts.gamma_matches_eigen || !eigen_data)
                    fail("pde_sandwich needs the lower_star and upper_1 hypotheses");
                break;
            case Pipeline::TailBounds:
                if (!consts.rho) fail("tail_bounds needs the coupling condition");
                if (params.equal_betas() ? !consts.theta_u1 : !consts.theta_u2)
                    fail("tail_bounds: no applicable upper-bound threshold");
                if (tail_horizon > grid.t_max)
                    fail("tail_bounds horizon exceeds the simulation horizon");
                break;
            case Pipeline::GammaLaw: {
                const auto why = gamma_law_hypothesis_issue(params, consts);
                if (!why.empty()) fail("gamma_law " + why);
                break;
            }
            case Pipeline::MalliavinLower:
                if (!(alpha > params.hurst)) fail("malliavin_lower needs alpha > H");
                if (!consts.rho) fail("malliavin_lower needs the coupling condition");
                if (params.equal_betas() ? !consts.theta_u1 : !consts.theta_u2)
                    fail("malliavin_lower: no applicable threshold");
                break;
        }
    }
}

Statistic aggregate_probability(int successes, int n) {
    if (n < 1) throw NumericalError("aggregate_probability: empty sample");
    Statistic s;
    s.n = n;
    s.mean = static_cast<double>(successes) / n;
    s.std_error = std::sqrt(s.mean * (1.0 - s.mean) / n);
    s.sd = std::sqrt(s.mean * (1.0 - s.mean));
    s.ci_lo = s.mean - 1.96 * s.std_error;
    s.ci_hi = s.mean + 1.96 * s.std_error;
    return s;
}

Statistic aggregate_times(const std::vector<double>& times) {
    Statistic s;
    s.n = static_cast<int>(times.size());
    if (s.n == 0) return s;
    double acc = 0.0, comp = 0.0;
    for (double v : times) {
        const double y = v - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    s.mean = acc / s.n;
    double var = 0.0;
    for (double v : times) var += (v - s.mean) * (v - s.mean);
    s.sd = s.n > 1 ? std::sqrt(var / (s.n - 1)) : 0.0;
    s.std_error = s.n > 0 ? s.sd / std::sqrt(static_cast<double>(s.n)) : 0.0;
    s.ci_lo = s.mean - 1.96 * s.std_error;
    s.ci_hi = s.mean + 1.96 * s.std_error;
    return s;
}

namespace {

bool contains(const std::vector<Pipeline>& v, Pipeline p) {
    return std::find(v.begin(), v.end(), p) != v.end();
}

TauRecord to_record(const StoppingEstimate& est) {
    return {est.t_hat, !est.crossed(), est.saturated, est.value_at_horizon};
}

struct SharedState {
    const CampaignSpec& spec;
    const DerivedConstants& consts;
    std::optional<FbmSampler> fbm;          // independent coupling
    std::optional<VolterraSampler> volterra;  // dependent coupling
    Eigen::ArrayXd t_alpha;                 // grid^alpha for MalliavinLower
    double log_u1 = 0.0;
};

SamplePath make_path(const SharedState& shared, int index) {
    const CampaignSpec& spec = shared.spec;
    Rng rng = Rng::for_path(spec.master_seed, static_cast<std::uint64_t>(index));
    SamplePath path;
    path.grid = spec.grid;
    path.hurst = spec.params.hurst;
    path.coupling = spec.params.coupling;
    if (spec.params.coupling == NoiseCoupling::Independent) {
        path.w = sample_bm(spec.grid, rng);
        path.bh = shared.fbm->sample(rng);
    } else {
        const Eigen::ArrayXd dw = bm_increments(spec.grid, rng);
        path.w.resize(spec.grid.n_points());
        path.w[0] = 0.0;
        for (int j = 0; j < spec.grid.n_steps; ++j) path.w[j + 1] = path.w[j] + dw[j];
        path.bh = shared.volterra->sample_from_increments(dw);
    }
    return path;
}

PathRecord simulate_path(const SharedState& shared, int index) {
    const CampaignSpec& spec = shared.spec;
    const DerivedConstants& consts = shared.consts;
    const SamplePath path = make_path(shared, index);

    PathRecord rec;
    rec.index = index;
    const auto& pls = spec.pipelines;
    const bool strict = spec.params.beta1 > spec.params.beta2;

    std::optional<StoppingEstimate> est_star, est_u1, est_u2, est_dd, est_pr;
    if (contains(pls, Pipeline::LowerStar) || contains(pls, Pipeline::PdeSandwich))
        est_star = tau_lower_star(path, spec.params, consts);
    if ((contains(pls, Pipeline::Upper1) || contains(pls, Pipeline::PdeSandwich) ||
         contains(pls, Pipeline::TailBounds) || contains(pls, Pipeline::GammaLaw)) &&
        !strict)
        est_u1 = tau_upper_1(path, spec.params, consts);
    if ((contains(pls, Pipeline::Upper2) || contains(pls, Pipeline::TailBounds) ||
         contains(pls, Pipeline::GammaLaw)) &&
        strict)
        est_u2 = tau_upper_2(path, spec.params, consts);
    if (contains(pls, Pipeline::DoubleStar) || contains(pls, Pipeline::Prime))
        est_dd = tau_double_star(path, spec.params, consts);
    if (contains(pls, Pipeline::Prime)) est_pr = tau_prime(path, spec.params, consts);
    if (contains(pls, Pipeline::UpperGeneral))
        rec.tau_ug = to_record(tau_upper_general(
            path, spec.params, consts,
            strict ? BetaCase::StrictBeta : BetaCase::EqualBeta));

    if (est_star) rec.tau_star = to_record(*est_star);
    if (est_u1) rec.tau_u1 = to_record(*est_u1);
    if (est_u2) rec.tau_u2 = to_record(*est_u2);
    if (est_dd) rec.tau_dd = to_record(*est_dd);
    if (est_pr) rec.tau_pr = to_record(*est_pr);

    // pathwise order checks (exact: censored counts as +infinity)
    if (est_star && est_u1)
        rec.order_violation |= est_star->time_or_inf() > est_u1->time_or_inf();
    if (est_star && est_u2)
        rec.order_violation |= est_star->time_or_inf() > est_u2->time_or_inf();
    if (est_pr && est_dd)
        rec.order_violation |= est_pr->time_or_inf() > est_dd->time_or_inf();

    if (contains(pls, Pipeline::PdeSandwich)) {
        const PdeTrajectory traj =
            solve_random_pde(spec.params, consts, path, *spec.mesh, spec.solver);
        rec.pde_status = static_cast<int>(traj.status);
        if (traj.blew_up()) {
            rec.t_blow = traj.t_blow;
            const double delta =
                5.0 * std::max(path.grid.dt(), spec.mesh->dx() * spec.mesh->dx()) * traj.t_blow;
            const double lo = est_star->time_or_inf();
            const double hi = est_u1->time_or_inf();
            rec.sandwich_violation = traj.t_blow < lo - delta || traj.t_blow > hi + delta;
        }
    }

    if (contains(pls, Pipeline::MalliavinLower)) {
        ExpFunctionalSpec fspec;
        fspec.rho_w = (*consts.rho)[0];
        fspec.rho_bh = (*consts.rho)[1];
        fspec.drift = strict ? consts.drift_upper_2() : consts.drift_upper_1();
        const auto cum = cumulative_exp_functional(path, fspec);
        double sup = 0.0;
        for (int j = 0; j < cum.values.size(); ++j) {
            const double ratio = (std::log1p(cum.values[j]) + shared.t_alpha[j]) /
                                 (shared.log_u1 + shared.t_alpha[j]);
            sup = std::max(sup, ratio);
        }
        rec.ratio_sup = std::max(1.0, sup);
    }
    return rec;
}

struct TauSummary {
    Statistic probability;
    Statistic time;
    double censor_rate = 0.0;
    int n_saturated = 0;
};

template <class Getter>
TauSummary summarize_tau(const std::vector<PathRecord>& records, Getter get,
                         double horizon_cap) {
    std::vector<double> times;
    int crossed = 0, present = 0, saturated = 0;
    for (const auto& rec : records) {
        const std::optional<TauRecord>& tr = get(rec);
        if (!tr) continue;
        ++present;
        if (tr->saturated) ++saturated;
        if (!tr->censored && tr->t <= horizon_cap) {
            ++crossed;
            times.push_back(tr->t);
        }
    }
    TauSummary s;
    if (present == 0) return s;
    s.probability = aggregate_probability(crossed, present);
    s.time = aggregate_times(times);
    s.censor_rate = 1.0 - static_cast<double>(crossed) / present;
    s.n_saturated = saturated;
    return s;
}

void fill_stats(PipelineStats& ps, const TauSummary& s) {
    ps.probability = s.probability;
    ps.time = s.time;
    ps.censor_rate = s.censor_rate;
    ps.n_saturated = s.n_saturated;
}

}  // namespace

SamplePath campaign_path(const CampaignSpec& spec, int index) {
    const DerivedConstants consts = derive_constants(spec.params);
    SharedState shared{spec, consts, std::nullopt, std::nullopt, {}, 0.0};
    if (spec.params.coupling == NoiseCoupling::Independent)
        shared.fbm.emplace(spec.grid, spec.params.hurst);
    else
        shared.volterra.emplace(spec.grid, spec.params.hurst);
    return make_path(shared, index);
}

CampaignReport run_campaign(const CampaignSpec& spec, int n_workers) {
    spec.params.validate();
    if (spec.n_paths < 1) throw ConfigError("campaign: n_paths must be >= 1");
    const DerivedConstants consts = derive_constants(spec.params);
    spec.check_applicability(consts);

    SharedState shared{spec, consts, std::nullopt, std::nullopt, {}, 0.0};
    if (spec.params.coupling == NoiseCoupling::Independent)
        shared.fbm.emplace(spec.grid, spec.params.hurst);
    else
        shared.volterra.emplace(spec.grid, spec.params.hurst);

    if (contains(spec.pipelines, Pipeline::MalliavinLower)) {
        const Eigen::ArrayXd t = spec.grid.times();
        shared.t_alpha.resize(t.size());
        for (int j = 0; j < t.size(); ++j) shared.t_alpha[j] = std::pow(t[j], spec.alpha);
        const double threshold =
            spec.params.equal_betas() ? *consts.theta_u1 : *consts.theta_u2;
        shared.log_u1 = std::log(threshold + 1.0);
    }

    std::vector<PathRecord> records(spec.n_paths);
    int workers = n_workers > 0 ? n_workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, spec.n_paths));

    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) records[i] = simulate_path(shared, i);
    };
    if (workers == 1) {
        run_range(0, spec.n_paths);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (spec.n_paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int b = w * chunk;
            const int e = std::min(spec.n_paths, b + chunk);
            if (b < e) pool.emplace_back(run_range, b, e);
        }
        for (auto& th : pool) th.join();
    }

    CampaignReport report;
    report.name = spec.name;
    report.version = kVersion;
    report.master_seed = spec.master_seed;
    report.grid = spec.grid;
    report.n_paths = spec.n_paths;
    report.records = std::move(records);

    const double horizon = spec.grid.t_max;
    auto& recs = report.records;
    const bool strict = spec.params.beta1 > spec.params.beta2;

    for (Pipeline p : spec.pipelines) {
        PipelineStats ps;
        switch (p) {
            case Pipeline::LowerStar: {
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_star; },
                                             horizon));
                ps.analytic["theta_lower"] = *consts.theta_lower;
                break;
            }
            case Pipeline::Upper1: {
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_u1; },
                                             horizon));
                ps.analytic["theta_u1"] = *consts.theta_u1;
                for (const auto& rec : recs)
                    if (rec.order_violation) ++ps.n_violations;
                break;
            }
            case Pipeline::Upper2: {
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_u2; },
                                             horizon));
                ps.analytic["theta_u2"] = *consts.theta_u2;
                for (const auto& rec : recs)
                    if (rec.order_violation) ++ps.n_violations;
                break;
            }
            case Pipeline::DoubleStar:
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_dd; },
                                             horizon));
                break;
            case Pipeline::Prime: {
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_pr; },
                                             horizon));
                for (const auto& rec : recs)
                    if (rec.order_violation) ++ps.n_violations;
                break;
            }
            case Pipeline::UpperGeneral:
                fill_stats(ps, summarize_tau(recs, [](const PathRecord& r) { return r.tau_ug; },
                                             horizon));
                break;
            case Pipeline::PdeSandwich: {
                std::vector<double> blow_times;
                int blew = 0, faults = 0;
                for (const auto& rec : recs) {
                    if (rec.pde_status == static_cast<int>(SolverStatus::NonPositivity) ||
                        rec.pde_status == static_cast<int>(SolverStatus::StepCollapse))
                        ++faults;
                    if (rec.t_blow) {
                        ++blew;
                        blow_times.push_back(*rec.t_blow);
                        if (rec.sandwich_violation) ++ps.n_violations;
                    }
                }
                ps.probability = aggregate_probability(blew, static_cast<int>(recs.size()));
                ps.time = aggregate_times(blow_times);
                ps.censor_rate = 1.0 - ps.probability.mean;
                ps.n_faults = faults;
                ps.analytic["theta_lower"] = *consts.theta_lower;
                ps.analytic["theta_u1"] = *consts.theta_u1;
                ps.analytic["blowup_threshold_factor"] = spec.solver.theta_factor;
                ps.notes["delta"] = "5 max(dt, dx^2) t_blow";
                ps.notes["blowup_threshold"] = "theta_factor * (sup f + 1); hit times refined "
                                               "at half step";
                break;
            }
            case Pipeline::TailBounds: {
                auto get = [&](const PathRecord& r) { return strict ? r.tau_u2 : r.tau_u1; };
                fill_stats(ps, summarize_tau(recs, get, spec.tail_horizon));
                const BetaCase bc = strict ? BetaCase::StrictBeta : BetaCase::EqualBeta;
                const TailBoundInput in =
                    make_tail_input(spec.params, consts, bc, spec.tail_horizon);
                const BoundValue conc = tail_bound_concentration(in);
                if (conc.applicable()) ps.analytic["concentration_bound"] = *conc.value;
                ps.notes["concentration"] = conc.diagnostics;
                const BoundValue markov =
                    tail_bound_markov(spec.params, consts, bc, spec.tail_horizon);
                if (markov.applicable()) ps.analytic["markov_bound"] = *markov.value;
                ps.notes["markov"] = markov.diagnostics;
                ps.analytic["mu_T"] =
                    mu_T(spec.tail_horizon, in.drift_a, in.rho1, in.rho2, in.hurst, in.coupling);
                ps.analytic["horizon"] = spec.tail_horizon;
                break;
            }
            case Pipeline::GammaLaw: {
                auto get = [&](const PathRecord& r) { return strict ? r.tau_u2 : r.tau_u1; };
                fill_stats(ps, summarize_tau(recs, get, horizon));
                GammaLawInput gin;
                gin.rho = (*consts.rho)[0];
                gin.drift_a = strict ? consts.a1 : consts.a;
                gin.threshold = strict ? *consts.theta_u2 : *consts.theta_u1;
                const GammaLawBounds glb = gamma_law_lower_bound(gin);
                ps.analytic["gamma_law_printed"] = glb.printed;
                ps.analytic["gamma_law_derived"] = glb.derived;
                ps.analytic["nu"] = gin.nu();
                // censor allowance: censored paths whose functional already sits
                // above half the threshold at the horizon
                int nearly = 0;
                for (const auto& rec : recs) {
                    const auto& tr = strict ? rec.tau_u2 : rec.tau_u1;
                    if (tr && tr->censored && tr->value_at_horizon >= 0.5 * gin.threshold)
                        ++nearly;
                }
                ps.analytic["censor_allowance"] = static_cast<double>(nearly) / recs.size();
                break;
            }
            case Pipeline::MalliavinLower: {
                std::vector<double> sups;
                for (const auto& rec : recs)
                    if (rec.ratio_sup) sups.push_back(*rec.ratio_sup);
                const Statistic stat = aggregate_times(sups);
                ps.time = stat;
                const double l_hat = std::max(1.0, stat.mean);
                const BetaCase bc = strict ? BetaCase::StrictBeta : BetaCase::EqualBeta;
                ps.analytic["L_alpha"] = l_hat;
                ps.analytic["alpha"] = spec.alpha;
                ps.analytic["lower_bound"] =
                    lower_bound_malliavin(spec.params, consts, spec.alpha, bc, l_hat);
                break;
            }
        }
        report.pipelines[pipeline_name(p)] = std::move(ps);
    }
    return report;
}

namespace {

nlohmann::json stat_json(const Statistic& s) {
    return {{"mean", s.mean}, {"sd", s.sd},       {"std_error", s.std_error},
            {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi}, {"n", s.n}};
}

}  // namespace

std::string CampaignReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["version"] = version;
    j["master_seed"] = master_seed;
    j["grid"] = {{"t_max", grid.t_max}, {"n_steps", grid.n_steps}};
    j["n_paths"] = n_paths;
    j["conventions"] = {
        {"volterra_normalization", "C_H fixed by int_0^t K_H(t,s)^2 ds = t^{2H}"},
        {"censoring", "paths not crossing before the horizon count as non-events; "
                      "the censoring rate is reported alongside"},
        {"seeding", "path i draws from the stream split(master_seed, i)"}};
    nlohmann::json jp;
    for (const auto& [pname, ps] : pipelines) {
        nlohmann::json e;
        e["probability"] = stat_json(ps.probability);
        e["time"] = stat_json(ps.time);
        e["censor_rate"] = ps.censor_rate;
        e["n_saturated"] = ps.n_saturated;
        e["n_violations"] = ps.n_violations;
        e["n_faults"] = ps.n_faults;
        e["analytic"] = ps.analytic;
        e["notes"] = ps.notes;
        jp[pname] = std::move(e);
    }
    j["pipelines"] = std::move(jp);
    return j.dump(2);
}

void CampaignReport::write_csv_summary(std::ostream& os) const {
    os << "campaign,pipeline,metric,value\n";
    auto row = [&](const std::string& pl, const std::string& metric, double v) {
        os << name << ',' << pl << ',' << metric << ',' << format_double(v) << '\n';
    };
    for (const auto& [pname, ps] : pipelines) {
        row(pname, "probability", ps.probability.mean);
        row(pname, "probability_se", ps.probability.std_error);
        row(pname, "probability_ci_lo", ps.probability.ci_lo);
        row(pname, "probability_ci_hi", ps.probability.ci_hi);
        row(pname, "time_mean", ps.time.mean);
        row(pname, "time_sd", ps.time.sd);
        row(pname, "censor_rate", ps.censor_rate);
        row(pname, "n_saturated", ps.n_saturated);
        row(pname, "n_violations", ps.n_violations);
        row(pname, "n_faults", ps.n_faults);
        for (const auto& [key, value] : ps.analytic) row(pname, key, value);
    }
}

void CampaignReport::write_records_csv(std::ostream& os) const {
    os << "seed,tau_star,tau_upper,upper_kind,t_blow,censored_star,censored_upper,"
          "saturated_star,saturated_upper\n";
    auto tau_str = [](const std::optional<TauRecord>& tr) {
        return tr && !tr->censored ? format_double(tr->t) : std::string("");
    };
    auto flag = [](const std::optional<TauRecord>& tr, bool TauRecord::*field) {
        return tr ? (tr.value().*field ? "1" : "0") : "";
    };
    for (const auto& rec : records) {
        const auto& upper = rec.tau_u2 ? rec.tau_u2 : rec.tau_u1;
        const char* kind = rec.tau_u2 ? "tau_u2" : (rec.tau_u1 ? "tau_u1" : "");
        os << rec.index << ',' << tau_str(rec.tau_star) << ',' << tau_str(upper) << ',' << kind
           << ',' << (rec.t_blow ? format_double(*rec.t_blow) : "") << ','
           << flag(rec.tau_star, &TauRecord::censored) << ',' << flag(upper, &TauRecord::censored)
           << ',' << flag(rec.tau_star, &TauRecord::saturated) << ','
           << flag(upper, &TauRecord::saturated) << '\n';
    }
}

}  // namespace blowlab
