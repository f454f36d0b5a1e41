#pragma once

// Experiment configuration: a JSON object of named blocks ("ml", "smst",
// "ivp", ...). Presets are patches over a built-in default configuration;
// overrides address single values by dotted path.

#include <string>
#include <string_view>
#include <vector>

#include "smst/experiments/result.hpp"
#include "smst/ivp.hpp"
#include "smst/models/fhn.hpp"
#include "smst/models/linear.hpp"
#include "smst/models/morris_lecar.hpp"
#include "smst/models/reciprocal_inhibition.hpp"
#include "smst/solver.hpp"

namespace smst::experiments {

struct Preset {
    std::string name;
    std::string description;
    std::string figure;
    Json patch;
};

[[nodiscard]] const Json& default_config();
[[nodiscard]] const std::vector<Preset>& preset_registry();
/// Throws configuration for an unknown name.
[[nodiscard]] const Preset& find_preset(std::string_view name);

/// Defaults patched by the preset, restricted to `blocks` (all blocks when empty).
[[nodiscard]] Json resolve_config(const Preset& preset, const std::vector<std::string>& blocks = {});

/// All leaf paths of a configuration, dotted, in document order.
[[nodiscard]] std::vector<std::string> config_paths(const Json& config);

/// Full dotted path for `path`, which may also be a unique suffix of one
/// ("epsilon" for "ml.epsilon"). Throws configuration when unknown or ambiguous.
[[nodiscard]] std::string resolve_path(const Json& config, std::string_view path);

/// Parses `text` with the type of the existing value at `path` and stores it.
/// Numbers accept integers and reals, integer slots reject fractions, lists
/// are comma separated. Returns the full path that was set.
std::string apply_override(Json& config, std::string_view path, std::string_view text);

/// Typed accessors; a missing key or a wrong type is a configuration error.
[[nodiscard]] double get_double(const Json& config, std::string_view path);
[[nodiscard]] int get_int(const Json& config, std::string_view path);
[[nodiscard]] bool get_bool(const Json& config, std::string_view path);
[[nodiscard]] std::string get_string(const Json& config, std::string_view path);
[[nodiscard]] std::vector<double> get_doubles(const Json& config, std::string_view path);
[[nodiscard]] std::vector<int> get_ints(const Json& config, std::string_view path);

[[nodiscard]] SmstOptions smst_options(const Json& config);
[[nodiscard]] ivp::IvpOptions ivp_options(const Json& config);
[[nodiscard]] ivp::Direction direction_from(const std::string& name);

[[nodiscard]] models::LinearParams linear_params(const Json& config);
[[nodiscard]] models::MorrisLecarParams ml_params(const Json& config);
[[nodiscard]] models::FhnParams fhn_params(const Json& config);
[[nodiscard]] models::ReciprocalInhibitionParams ri_params(const Json& config);

}  // namespace smst::experiments
