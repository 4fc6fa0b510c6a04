#ifndef BLOWLAB_MC_HPP
#define BLOWLAB_MC_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blowlab/pde.hpp"
#include "blowlab/prob.hpp"
#include "blowlab/stopping.hpp"

namespace blowlab {

enum class Pipeline {
    LowerStar,
    Upper1,
    Upper2,
    DoubleStar,
    Prime,
    UpperGeneral,
    PdeSandwich,
    TailBounds,
    GammaLaw,
    MalliavinLower,
};

const char* pipeline_name(Pipeline p);
std::optional<Pipeline> pipeline_from_name(const std::string& name);

struct CampaignSpec {
    std::string name = "campaign";
    SystemParams params;
    TimeGrid grid;
    std::optional<SpatialMesh> mesh;  // enables PdeSandwich
    int n_paths = 1;
    std::uint64_t master_seed = 1;
    std::vector<Pipeline> pipelines;
    double tail_horizon = 1.0;  // T for the fixed-horizon tail estimates
    double alpha = 1.2;         // MalliavinLower exponent
    SolverControls solver;

    /// Throws ConfigError when a requested pipeline's preconditions fail.
    void check_applicability(const DerivedConstants& consts) const;
};

struct TauRecord {
    double t = 0.0;       // crossing time, or the horizon when censored
    bool censored = true;
    bool saturated = false;
    double value_at_horizon = 0.0;  // the functional's value at the grid horizon
};

struct PathRecord {
    int index = 0;
    std::optional<TauRecord> tau_star, tau_u1, tau_u2, tau_dd, tau_pr, tau_ug;
    std::optional<double> t_blow;  // PdeSandwich, blow-up detected
    int pde_status = -1;           // SolverStatus as int, -1 when not run
    bool order_violation = false;  // tau* > tau_1* (or tau' > tau_**) on this path
    bool sandwich_violation = false;
    std::optional<double> ratio_sup;  // MalliavinLower per-path statistic
};

struct Statistic {
    double mean = 0.0;
    double sd = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95%, normal approximation
    int n = 0;
};

/// p-hat with binomial standard error.
Statistic aggregate_probability(int successes, int n);

/// Mean / sample SD of the crossed-path times; SE = SD / sqrt(n).
Statistic aggregate_times(const std::vector<double>& times);

struct PipelineStats {
    Statistic probability;  // crossing / blow-up probability within its horizon
    Statistic time;         // over crossed (blown-up) paths
    double censor_rate = 0.0;
    int n_saturated = 0;
    int n_violations = 0;
    int n_faults = 0;
    std::map<std::string, double> analytic;      // attached bounds and constants
    std::map<std::string, std::string> notes;
};

struct CampaignReport {
    std::string name;
    std::string version;
    std::uint64_t master_seed = 0;
    TimeGrid grid;
    int n_paths = 0;
    std::map<std::string, PipelineStats> pipelines;
    std::vector<PathRecord> records;

    std::string to_json() const;
    void write_csv_summary(std::ostream& os) const;
    void write_records_csv(std::ostream& os) const;
};

/// Deterministic given the spec: path i draws from stream split(master_seed, i),
/// workers own disjoint index ranges, aggregation is order-fixed and compensated.
/// Per-path numerical faults are recorded, never abort the campaign.
CampaignReport run_campaign(const CampaignSpec& spec, int n_workers = 0);

/// The exact noise realization campaign stream `index` sees (for dumps and
/// single-path reruns). Rebuilds the sampler; prefer run_campaign in bulk.
SamplePath campaign_path(const CampaignSpec& spec, int index);

}  // namespace blowlab

#endif
