#include "blowlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blowlab/common.hpp"

namespace blowlab {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ConfigError("config " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            schema_error(where, "unknown key '" + key + "'");
    }
}

double require_number(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) schema_error(where, std::string("missing key '") + key + "'");
    if (!obj[key].is_number()) schema_error(where, std::string("'") + key + "' must be a number");
    return obj[key].get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<double>();
}

InitialData parse_initial(const json& obj, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "must be an object");
    const std::string type = obj.value("type", "");
    if (type == "eigen_multiple") {
        reject_unknown_keys(obj, where, {"type", "c1", "c2"});
        EigenMultipleData em;
        em.c1 = require_number(obj, where, "c1");
        em.c2 = require_number(obj, where, "c2");
        return em;
    }
    if (type == "tabulated") {
        reject_unknown_keys(obj, where, {"type", "f1", "f2"});
        TabulatedData tab;
        for (const char* key : {"f1", "f2"}) {
            if (!obj.contains(key) || !obj[key].is_array())
                schema_error(where, std::string("'") + key + "' must be an array");
            const auto& arr = obj[key];
            Eigen::ArrayXd values(arr.size());
            for (std::size_t i = 0; i < arr.size(); ++i) values[i] = arr[i].get<double>();
            (std::string(key) == "f1" ? tab.f1 : tab.f2) = values;
        }
        return tab;
    }
    schema_error(where, "initial.type must be 'eigen_multiple' or 'tabulated'");
}

SystemParams parse_params(const json& obj, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "must be an object");
    reject_unknown_keys(obj, where,
                        {"beta1", "beta2", "gamma1", "gamma2", "k", "hurst", "coupling",
                         "domain_length", "initial"});
    SystemParams p;
    p.beta1 = require_number(obj, where, "beta1");
    p.beta2 = require_number(obj, where, "beta2");
    p.gamma1 = require_number(obj, where, "gamma1");
    p.gamma2 = require_number(obj, where, "gamma2");
    p.hurst = require_number(obj, where, "hurst");
    p.domain_length = require_number(obj, where, "domain_length");

    if (!obj.contains("k") || !obj["k"].is_array() || obj["k"].size() != 2 ||
        !obj["k"][0].is_array() || obj["k"][0].size() != 2 || obj["k"][1].size() != 2)
        schema_error(where, "'k' must be a 2x2 array");
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) p.k(i, j) = obj["k"][i][j].get<double>();

    const std::string coupling = obj.value("coupling", "independent");
    if (coupling == "independent")
        p.coupling = NoiseCoupling::Independent;
    else if (coupling == "volterra_dependent")
        p.coupling = NoiseCoupling::VolterraDependent;
    else
        schema_error(where, "coupling must be 'independent' or 'volterra_dependent'");

    if (!obj.contains("initial")) schema_error(where, "missing key 'initial'");
    p.initial = parse_initial(obj["initial"], where + ".initial");
    return p;
}

CampaignConfig parse_campaign(const json& obj, const std::string& where,
                              const SystemParams& params) {
    if (!obj.is_object()) schema_error(where, "must be an object");
    reject_unknown_keys(obj, where,
                        {"name", "grid", "n_paths", "seed", "pipelines", "mesh", "tail_horizon",
                         "alpha", "theta_factor", "snapshot_stride", "dump_records",
                         "dump_noise_paths"});
    CampaignConfig cc;
    cc.spec.params = params;
    cc.spec.name = obj.value("name", "campaign");

    if (!obj.contains("grid") || !obj["grid"].is_object())
        schema_error(where, "missing 'grid' object");
    reject_unknown_keys(obj["grid"], where + ".grid", {"t_max", "n_steps"});
    cc.spec.grid = TimeGrid(require_number(obj["grid"], where + ".grid", "t_max"),
                            static_cast<int>(require_number(obj["grid"], where + ".grid",
                                                            "n_steps")));

    cc.spec.n_paths = static_cast<int>(number_or(obj, "n_paths", 1));
    cc.spec.master_seed = static_cast<std::uint64_t>(number_or(obj, "seed", 1));
    cc.spec.tail_horizon = number_or(obj, "tail_horizon", cc.spec.grid.t_max);
    cc.spec.alpha = number_or(obj, "alpha", 1.2);
    cc.spec.solver.theta_factor = number_or(obj, "theta_factor", 1e8);
    cc.spec.solver.snapshot_stride =
        static_cast<int>(number_or(obj, "snapshot_stride", 0));
    cc.dump_records = obj.value("dump_records", false);
    cc.dump_noise_paths = static_cast<int>(number_or(obj, "dump_noise_paths", 0));

    if (obj.contains("mesh")) {
        reject_unknown_keys(obj["mesh"], where + ".mesh", {"n_cells"});
        cc.spec.mesh = SpatialMesh(params.domain_length,
                                   static_cast<int>(require_number(obj["mesh"], where + ".mesh",
                                                                   "n_cells")));
    }

    if (!obj.contains("pipelines") || !obj["pipelines"].is_array())
        schema_error(where, "missing 'pipelines' array");
    for (const auto& entry : obj["pipelines"]) {
        const auto parsed = pipeline_from_name(entry.get<std::string>());
        if (!parsed)
            schema_error(where, "unknown pipeline '" + entry.get<std::string>() + "'");
        cc.spec.pipelines.push_back(*parsed);
    }
    return cc;
}

BoundsOptions parse_bounds(const json& obj, const std::string& where) {
    reject_unknown_keys(obj, where,
                        {"horizon", "alpha", "wang_c", "tmax_proxy", "concentration_literal",
                         "l_alpha"});
    BoundsOptions b;
    b.horizon = number_or(obj, "horizon", b.horizon);
    b.alpha = number_or(obj, "alpha", b.alpha);
    b.wang_c = number_or(obj, "wang_c", b.wang_c);
    b.tmax_proxy = number_or(obj, "tmax_proxy", b.tmax_proxy);
    b.concentration_literal = obj.value("concentration_literal", false);
    if (obj.contains("l_alpha")) {
        const auto& la = obj["l_alpha"];
        reject_unknown_keys(la, where + ".l_alpha", {"n_paths", "t_max", "n_steps", "seed"});
        b.l_alpha.n_paths = static_cast<int>(number_or(la, "n_paths", b.l_alpha.n_paths));
        b.l_alpha.t_max = number_or(la, "t_max", b.l_alpha.t_max);
        b.l_alpha.n_steps = static_cast<int>(number_or(la, "n_steps", b.l_alpha.n_steps));
        b.l_alpha.seed = static_cast<std::uint64_t>(number_or(la, "seed", 20240501));
    }
    return b;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        // byte offset -> line number for the message
        std::size_t line = 1;
        for (std::size_t i = 0; i < err.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + err.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
    reject_unknown_keys(root, "top level", {"params", "bounds", "campaigns", "output"});

    ExperimentConfig cfg;
    if (!root.contains("params")) throw ConfigError(origin + ": missing 'params'");
    cfg.params = parse_params(root["params"], "params");
    cfg.params.validate();

    if (root.contains("bounds")) cfg.bounds = parse_bounds(root["bounds"], "bounds");

    if (root.contains("campaigns")) {
        if (!root["campaigns"].is_array())
            throw ConfigError(origin + ": 'campaigns' must be an array");
        int idx = 0;
        for (const auto& entry : root["campaigns"]) {
            cfg.campaigns.push_back(
                parse_campaign(entry, "campaigns[" + std::to_string(idx) + "]", cfg.params));
            ++idx;
        }
    }

    if (root.contains("output")) {
        reject_unknown_keys(root["output"], "output", {"directory"});
        cfg.output_dir = root["output"].value("directory", ".");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

}  // namespace blowlab
