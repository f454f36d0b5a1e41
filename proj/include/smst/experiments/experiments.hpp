#pragma once

// Reproductions of the reference computations. Each experiment takes a
// resolved configuration (see config.hpp) and returns tables and metrics.

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smst/experiments/config.hpp"
#include "smst/experiments/result.hpp"

namespace smst::experiments {

/// Solver accuracy on the linear benchmark: errors against the closed form,
/// observed orders, per-interval decay ratios and the decay-factor bound.
[[nodiscard]] ExperimentResult linear_benchmark(const Json& config);

/// Pairs of trajectories straddling a computed slow-manifold point along the
/// strong unstable (forward) and strong stable (backward) directions.
[[nodiscard]] ExperimentResult bracketing_test(const Json& config);

/// Section hits of trajectories launched near the slow manifold of saddle type.
[[nodiscard]] ExperimentResult manifold_sweep(const Json& config);

/// Signed gap between the unstable- and stable-manifold traces on the section,
/// for a list of eps values.
[[nodiscard]] ExperimentResult section_scan(const Json& config);

/// First-return map of a segment in the section, with spike counts.
[[nodiscard]] ExperimentResult return_map(const Json& config);

/// Homoclinic orbit assembly for travelling waves (fast or slow).
[[nodiscard]] ExperimentResult fhn_homoclinic(const Json& config);

/// Canard on the saddle sheet of the reciprocal-inhibition model with its
/// displaced stable and unstable fans.
[[nodiscard]] ExperimentResult ri_canard(const Json& config);

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::string figure;
    std::string default_preset;
    /// Config blocks the experiment reads.
    std::vector<std::string> blocks;
    std::function<ExperimentResult(const Json&)> run;
};

[[nodiscard]] const std::vector<ExperimentInfo>& experiment_registry();
/// Accepts '-' in place of '_'. Throws configuration for an unknown name.
[[nodiscard]] const ExperimentInfo& find_experiment(std::string_view name);

/// Resolves preset and overrides for an experiment and runs it; the result's
/// inputs echo all three.
[[nodiscard]] ExperimentResult run_experiment(std::string_view experiment, std::string_view preset,
                                              const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Runs an experiment on a complete configuration (as echoed in a result's inputs).
[[nodiscard]] ExperimentResult run_with_config(std::string_view experiment, const Json& config,
                                               const std::string& preset_label = "custom");

}  // namespace smst::experiments
