#include <algorithm>

#include "smst/experiments/experiments.hpp"

namespace smst::experiments {

namespace {

std::vector<ExperimentInfo> make_registry() {
    const std::vector<std::string> bracketing{"ml", "ml_mesh", "smst", "ivp", "shadowing", "bracketing"};
    const std::vector<std::string> sweep{"ml", "ml_mesh", "smst", "ivp", "shadowing", "sweep"};
    auto scan = sweep;
    scan.push_back("scan");
    return {
        {"linear_benchmark", "solver accuracy, convergence order and decay ratios on the linear system", "-",
         "default", {"linear", "smst"}, linear_benchmark},
        {"bracketing_test", "displaced pairs straddling the Morris-Lecar slow manifold of saddle type", "terman_test",
         "terman_test", bracketing, bracketing_test},
        {"manifold_sweep", "section hits of trajectories launched next to the slow manifold", "terman_umfld",
         "terman_umfld", sweep, manifold_sweep},
        {"section_scan", "signed gap between unstable and stable manifold traces on I = 0.075", "terman_sect",
         "terman_sect", scan, section_scan},
        {"return_map", "first-return map of a segment in I = 0.075 with spike counts", "terman_retmap", "terman",
         {"ml", "ivp", "return_map"}, return_map},
        {"fhn_homoclinic", "FitzHugh-Nagumo travelling-wave homoclinic orbit assembly", "fhn_fast_orbit",
         "fhn_fast_wave", {"fhn", "smst", "ivp", "shadowing", "homoclinic"}, fhn_homoclinic},
        {"ri_canard", "canard on the saddle sheet of the reciprocal-inhibition model", "rifig", "ri_section52",
         {"ri", "smst", "ivp", "shadowing", "canard"}, ri_canard},
    };
}

std::string normalized(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
    static const std::vector<ExperimentInfo> registry = make_registry();
    return registry;
}

const ExperimentInfo& find_experiment(std::string_view name) {
    const auto key = normalized(name);
    for (const auto& e : experiment_registry())
        if (e.name == key) return e;
    std::string known;
    for (const auto& e : experiment_registry()) known += (known.empty() ? "" : ", ") + e.name;
    fail(ErrorKind::configuration, "unknown experiment \"" + std::string(name) + "\" (known: " + known + ")");
}

ExperimentResult run_with_config(std::string_view experiment, const Json& config, const std::string& preset_label) {
    const auto& info = find_experiment(experiment);
    for (const auto& block : info.blocks)
        if (!config.contains(block))
            fail(ErrorKind::configuration, "configuration lacks block \"" + block + "\" needed by " + info.name);
    auto result = info.run(config);
    result.name = info.name;
    if (!result.inputs.is_object()) result.inputs = Json::object();
    result.inputs["experiment"] = info.name;
    result.inputs["preset"] = preset_label;
    if (!result.inputs.contains("overrides")) result.inputs["overrides"] = Json::object();
    result.inputs["config"] = config;
    return result;
}

ExperimentResult run_experiment(std::string_view experiment, std::string_view preset,
                                const std::vector<std::pair<std::string, std::string>>& overrides) {
    const auto& info = find_experiment(experiment);
    const auto& p = find_preset(preset.empty() ? std::string_view(info.default_preset) : preset);
    Json config = resolve_config(p, info.blocks);
    Json applied = Json::object();
    for (const auto& [path, value] : overrides) {
        const auto full = apply_override(config, path, value);
        applied[full] = config.at(Json::json_pointer("/" + [&] {
            std::string s = full;
            std::replace(s.begin(), s.end(), '.', '/');
            return s;
        }()));
    }
    auto result = run_with_config(info.name, config, p.name);
    result.inputs["overrides"] = applied;
    return result;
}

}  // namespace smst::experiments
