#include "smst/experiments/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace smst::experiments {

namespace {

Json make_defaults() {
    return Json::parse(R"({
  "linear": {
    "epsilon": 0.1,
    "span": 1.0,
    "y0": 0.0,
    "recurrence_intervals": 100,
    "mesh_sizes": [10, 20, 40, 80],
    "perturbation": 0.5,
    "ratio_samples": 50
  },
  "ml": { "k": -0.22, "epsilon": 0.006366 },
  "ml_mesh": { "v_min": -0.2, "v_max": -0.05, "points": 400 },
  "fhn": { "p": 0.0, "s": 1.2463, "epsilon": 0.001 },
  "ri": {
    "omega": 0.03, "gamma": 10.0, "r": -4.0, "theta": 0.01333, "a": 1.0, "s": 1.0,
    "sigma1": 3.0, "sigma2": 1.2652372051, "epsilon": 0.0001
  },
  "smst": {
    "newton_tolerance": 1e-12,
    "max_iterations": 25,
    "damping": 1.0,
    "max_halvings": 4,
    "jacobian": "analytic"
  },
  "ivp": { "rel_tol": 1e-12, "abs_tol": 1e-14, "state_bound": 5.0, "max_steps": 10000000 },
  "shadowing": { "threshold": 1e-6, "horizon": 5.0, "margin": 20.0, "points": 12 },
  "bracketing": {
    "base_v": -0.109854033586602,
    "base_point": [],
    "distances": [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12],
    "t_span": 0.2,
    "departure": 0.01
  },
  "sweep": {
    "points": 20,
    "launch_range": [0.05, 0.9],
    "displacement": 5e-5,
    "stable_points": 4,
    "stable_displacement": 5e-8,
    "stable_scan": 240,
    "stable_window": 2e-4,
    "section_level": 0.075,
    "direction": "decreasing",
    "t_max": 50.0,
    "stable_t_max": 1.0,
    "cluster_radius": 1e-8
  },
  "scan": { "epsilons": [], "stable_points": 9 },
  "return_map": {
    "slope": 1.2107,
    "intercept": 0.35959,
    "v_min": 0.007,
    "v_max": 0.01,
    "points": 300,
    "section_level": 0.075,
    "direction": "decreasing",
    "t_max": 20.0,
    "jump_factor": 10.0
  },
  "homoclinic": {
    "wave": "fast",
    "right_branch": [1.0, 0.72],
    "left_branch": [-0.35, -0.0001],
    "points": 200,
    "q_displacement": 1e-8,
    "join_radius": 0.05,
    "fan_points": 40,
    "fan_displacement": 1e-8,
    "fan_span": 0.1,
    "root_tolerance": 1e-10,
    "neighbourhood": 1e-3,
    "pulses": 1,
    "t_max": 0.3,
    "tracking_fraction": 0.8
  },
  "canard": {
    "base_point": [-0.16851015831, 0.85854544475, -0.41290838536, -0.062963871],
    "t_span": 0.15,
    "points": 200,
    "displacement": 1e-8,
    "fan_fractions": [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0],
    "departure": 0.01,
    "interior_fraction": 0.8
  }
})");
}

std::vector<Preset> make_presets() {
    std::vector<Preset> p;
    p.push_back({"default", "linear benchmark, eps = 0.1", "-", Json::object()});
    p.push_back({"terman_test", "Morris-Lecar at (k, eps) = (-0.22, 0.002), 200-point mesh", "terman_test",
                 Json::parse(R"({"ml": {"epsilon": 0.002}, "ml_mesh": {"points": 200}})")});
    p.push_back({"terman_umfld", "Morris-Lecar at (k, eps) = (-0.22, 0.006366)", "terman_umfld",
                 Json::parse(R"({"ml": {"epsilon": 0.006366}})")});
    p.push_back({"terman", "Morris-Lecar at (k, eps) = (-0.22, 0.006366), return-map tolerances", "terman_retmap",
                 Json::parse(R"({"ml": {"epsilon": 0.006366}, "ivp": {"rel_tol": 1e-10, "abs_tol": 1e-12}})")});
    p.push_back({"terman_sect", "Morris-Lecar section scan over eps = 0.006362, 0.006366, 0.006367", "terman_sect",
                 Json::parse(R"({"ml": {"epsilon": 0.006366}, "scan": {"epsilons": [0.006362, 0.006366, 0.006367]}})")});
    p.push_back({"fhn_fast_wave", "FitzHugh-Nagumo fast wave, (p, s, eps) = (0, 1.2463, 1e-3)", "fhn_fast_orbit",
                 Json::parse(R"({"fhn": {"p": 0.0, "s": 1.2463, "epsilon": 0.001},
                                 "homoclinic": {"wave": "fast"}, "ivp": {"state_bound": 10.0}})")});
    p.push_back({"fhn_slow_wave", "FitzHugh-Nagumo slow wave, (p, s, eps) = (0, 0.29491, 1e-3)", "fhn_slow_wave1",
                 Json::parse(R"({"fhn": {"p": 0.0, "s": 0.29491, "epsilon": 0.001},
                                 "homoclinic": {"wave": "slow"}, "ivp": {"state_bound": 10.0},
                                 "smst": {"newton_tolerance": 1e-10}})")});
    p.push_back({"ri_section52", "reciprocal inhibition canard from the segment-B point, eps = 1e-4", "rifig",
                 Json::parse(R"({"ri": {"epsilon": 0.0001}, "ivp": {"state_bound": 10.0},
                                 "smst": {"newton_tolerance": 1e-10}})")});
    return p;
}

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::configuration, what); }

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

void collect_paths(const Json& node, const std::string& prefix, std::vector<std::string>& out) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            collect_paths(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else {
        out.push_back(prefix);
    }
}

Json::json_pointer pointer_of(std::string_view dotted) {
    std::string p;
    for (const auto& part : split(dotted, '.')) p += "/" + part;
    return Json::json_pointer(p);
}

const Json& lookup(const Json& config, std::string_view path) {
    const auto ptr = pointer_of(path);
    if (!config.contains(ptr)) config_error("missing configuration value " + std::string(path));
    return config.at(ptr);
}

double parse_double(const std::string& text, std::string_view path) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        config_error("override " + std::string(path) + ": '" + text + "' is not a finite number");
    return v;
}

long long parse_integer(const std::string& text, std::string_view path) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        config_error("override " + std::string(path) + ": '" + text + "' is not an integer");
    return v;
}

bool parse_bool(const std::string& text, std::string_view path) {
    const std::string t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    config_error("override " + std::string(path) + ": '" + text + "' is not a boolean");
}

Json parse_like(const Json& slot, const std::string& text, std::string_view path) {
    switch (slot.type()) {
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned: return parse_integer(text, path);
        case Json::value_t::number_float: return parse_double(text, path);
        case Json::value_t::boolean: return parse_bool(text, path);
        case Json::value_t::string: return trim(text);
        default: break;
    }
    config_error("override " + std::string(path) + " does not name a scalar or list value");
}

}  // namespace

const Json& default_config() {
    static const Json defaults = make_defaults();
    return defaults;
}

const std::vector<Preset>& preset_registry() {
    static const std::vector<Preset> presets = make_presets();
    return presets;
}

const Preset& find_preset(std::string_view name) {
    for (const auto& p : preset_registry())
        if (p.name == name) return p;
    config_error("unknown preset '" + std::string(name) + "'");
}

Json resolve_config(const Preset& preset, const std::vector<std::string>& blocks) {
    Json merged = default_config();
    merged.merge_patch(preset.patch);
    if (blocks.empty()) return merged;
    Json out = Json::object();
    for (const auto& b : blocks) {
        if (!merged.contains(b)) config_error("unknown configuration block " + b);
        out[b] = merged[b];
    }
    return out;
}

std::vector<std::string> config_paths(const Json& config) {
    std::vector<std::string> out;
    collect_paths(config, "", out);
    return out;
}

std::string resolve_path(const Json& config, std::string_view path) {
    const auto paths = config_paths(config);
    for (const auto& p : paths)
        if (p == path) return p;
    std::vector<std::string> matches;
    const std::string suffix = "." + std::string(path);
    for (const auto& p : paths)
        if (p.size() > suffix.size() && p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0)
            matches.push_back(p);
    if (matches.size() == 1) return matches.front();
    if (matches.empty()) config_error("unknown configuration path '" + std::string(path) + "'");
    std::string list;
    for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m;
    config_error("ambiguous configuration path '" + std::string(path) + "' matches " + list);
}

std::string apply_override(Json& config, std::string_view path, std::string_view text) {
    const std::string full = resolve_path(config, path);
    Json& slot = config.at(pointer_of(full));
    const std::string value(text);
    if (slot.is_array()) {
        Json list = Json::array();
        const std::string body = trim(value);
        if (!body.empty()) {
            // Element type from the existing first element; reals when empty.
            const Json like = slot.empty() ? Json(0.0) : slot.front();
            for (const auto& item : split(body, ',')) list.push_back(parse_like(like, item, full));
        }
        slot = std::move(list);
    } else {
        slot = parse_like(slot, value, full);
    }
    return full;
}

double get_double(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_number()) config_error(std::string(path) + " must be a number");
    return v.get<double>();
}

int get_int(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_number_integer()) config_error(std::string(path) + " must be an integer");
    const auto i = v.get<long long>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
        config_error(std::string(path) + " is out of range");
    return static_cast<int>(i);
}

bool get_bool(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_boolean()) config_error(std::string(path) + " must be a boolean");
    return v.get<bool>();
}

std::string get_string(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_string()) config_error(std::string(path) + " must be a string");
    return v.get<std::string>();
}

std::vector<double> get_doubles(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_array()) config_error(std::string(path) + " must be a list");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) config_error(std::string(path) + " must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<int> get_ints(const Json& config, std::string_view path) {
    const Json& v = lookup(config, path);
    if (!v.is_array()) config_error(std::string(path) + " must be a list");
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) config_error(std::string(path) + " must hold integers");
        out.push_back(x.get<int>());
    }
    return out;
}

SmstOptions smst_options(const Json& config) {
    SmstOptions o;
    o.newton_tolerance = get_double(config, "smst.newton_tolerance");
    o.max_iterations = get_int(config, "smst.max_iterations");
    o.damping = get_double(config, "smst.damping");
    o.max_halvings = get_int(config, "smst.max_halvings");
    const auto mode = get_string(config, "smst.jacobian");
    if (mode == "analytic")
        o.jacobian_mode = JacobianMode::analytic;
    else if (mode == "finite_difference")
        o.jacobian_mode = JacobianMode::finite_difference;
    else
        config_error("smst.jacobian must be 'analytic' or 'finite_difference'");
    o.validate();
    return o;
}

ivp::IvpOptions ivp_options(const Json& config) {
    ivp::IvpOptions o;
    o.rel_tol = get_double(config, "ivp.rel_tol");
    o.abs_tol = get_double(config, "ivp.abs_tol");
    o.state_bound = get_double(config, "ivp.state_bound");
    o.max_steps = get_int(config, "ivp.max_steps");
    o.validate();
    return o;
}

ivp::Direction direction_from(const std::string& name) {
    if (name == "increasing") return ivp::Direction::increasing;
    if (name == "decreasing") return ivp::Direction::decreasing;
    if (name == "either") return ivp::Direction::either;
    config_error("section direction must be increasing, decreasing or either, got '" + name + "'");
}

models::LinearParams linear_params(const Json& config) {
    models::LinearParams p;
    p.epsilon = get_double(config, "linear.epsilon");
    return p;
}

models::MorrisLecarParams ml_params(const Json& config) {
    models::MorrisLecarParams p;
    p.k = get_double(config, "ml.k");
    p.epsilon = get_double(config, "ml.epsilon");
    return p;
}

models::FhnParams fhn_params(const Json& config) {
    models::FhnParams p;
    p.p = get_double(config, "fhn.p");
    p.s = get_double(config, "fhn.s");
    p.epsilon = get_double(config, "fhn.epsilon");
    return p;
}

models::ReciprocalInhibitionParams ri_params(const Json& config) {
    models::ReciprocalInhibitionParams p;
    p.omega = get_double(config, "ri.omega");
    p.gamma = get_double(config, "ri.gamma");
    p.r = get_double(config, "ri.r");
    p.theta = get_double(config, "ri.theta");
    p.a = get_double(config, "ri.a");
    p.s = get_double(config, "ri.s");
    p.sigma1 = get_double(config, "ri.sigma1");
    p.sigma2 = get_double(config, "ri.sigma2");
    p.epsilon = get_double(config, "ri.epsilon");
    return p;
}

}  // namespace smst::experiments
