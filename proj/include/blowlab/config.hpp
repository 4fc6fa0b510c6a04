#ifndef BLOWLAB_CONFIG_HPP
#define BLOWLAB_CONFIG_HPP

#include <string>
#include <vector>

#include "blowlab/mc.hpp"
#include "blowlab/prob.hpp"

namespace blowlab {

struct BoundsOptions {
    double horizon = 1.0;          // T for the fixed-horizon tail bounds
    double alpha = 1.2;            // Malliavin lower-bound exponent
    double wang_c = 1.0;           // heat-kernel constant for the sharp threshold
    double tmax_proxy = 40.0;      // truncation horizon for infinity-proxy quantities
    bool concentration_literal = false;
    LAlphaControls l_alpha;
};

struct CampaignConfig {
    CampaignSpec spec;
    bool dump_records = false;
    int dump_noise_paths = 0;
};

struct ExperimentConfig {
    SystemParams params;
    BoundsOptions bounds;
    std::vector<CampaignConfig> campaigns;
    std::string output_dir = ".";
};

/// Parses a JSON experiment config. Unknown keys anywhere are errors; parse
/// and schema errors throw ConfigError with a line-anchored message.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace blowlab

#endif
