#include "smst/cli/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

namespace smst::cli {

namespace fs = std::filesystem;
using experiments::ExperimentResult;
using experiments::Table;

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string table_csv(const Table& table) {
    std::string out;
    const auto& cols = table.columns();
    for (size_t c = 0; c < cols.size(); ++c) {
        if (c) out += ',';
        out += cols[c];
    }
    out += '\n';
    for (const auto& row : table.rows()) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_number(row[c]);
        }
        out += '\n';
    }
    return out;
}

Json summary_json(const ExperimentResult& result, double runtime_seconds) {
    Json j;
    j["artifact_version"] = kArtifactVersion;
    j["experiment"] = result.name;
    j["preset"] = result.inputs.value("preset", "custom");
    j["overrides"] = result.inputs.value("overrides", Json::object());
    j["config"] = result.inputs.value("config", Json::object());
    Json metrics = Json::object();
    for (const auto& [k, v] : result.summary) metrics[k] = v;
    j["metrics"] = metrics;
    Json tables = Json::array();
    for (const auto& t : result.tables)
        tables.push_back({{"name", t.name()}, {"file", t.name() + ".csv"}, {"columns", t.columns()},
                          {"rows", t.size()}});
    j["tables"] = tables;
    j["provenance"] = result.provenance.is_null() ? Json::object() : result.provenance;
    j["runtime_seconds"] = runtime_seconds;
    return j;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::configuration, "cannot write " + path.string());
    f << text;
    if (!f) fail(ErrorKind::configuration, "write failed for " + path.string());
}

}  // namespace

std::vector<fs::path> write_artifacts(const ExperimentResult& result, const fs::path& dir, const Formats& formats,
                                      double runtime_seconds) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::configuration, "cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<fs::path> written;
    if (formats.csv)
        for (const auto& t : result.tables) {
            written.push_back(dir / (t.name() + ".csv"));
            write_file(written.back(), table_csv(t));
        }
    if (formats.json) {
        written.push_back(dir / "summary.json");
        write_file(written.back(), summary_json(result, runtime_seconds).dump(2) + "\n");
    }
    return written;
}

Json error_json(const std::string& kind, const std::string& message, const std::vector<std::string>& candidates) {
    Json e{{"kind", kind}, {"message", message}};
    if (!candidates.empty()) e["candidates"] = candidates;
    return Json{{"error", e}};
}

namespace {

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& e : experiments::experiment_registry()) names.push_back(e.name);
    return names;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : experiments::preset_registry()) names.push_back(p.name);
    return names;
}

bool known_experiment(const std::string& name) {
    try {
        (void)experiments::find_experiment(name);
        return true;
    } catch (const Error&) {
        return false;
    }
}

Formats parse_formats(const std::string& text) {
    Formats f{false, false};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "csv")
            f.csv = true;
        else if (item == "json")
            f.json = true;
        else
            fail(ErrorKind::configuration, "unknown format \"" + item + "\" (use csv, json or csv,json)");
    }
    if (!f.csv && !f.json) fail(ErrorKind::configuration, "no output format selected");
    return f;
}

void list(const std::string& kind, std::ostream& out) {
    char line[512];
    if (kind == "experiments") {
        for (const auto& e : experiments::experiment_registry()) {
            std::snprintf(line, sizeof line, "%-18s %s [figure: %s, preset: %s]\n", e.name.c_str(),
                          e.description.c_str(), e.figure.c_str(), e.default_preset.c_str());
            out << line;
        }
    } else {
        for (const auto& p : experiments::preset_registry()) {
            std::snprintf(line, sizeof line, "%-18s %s [figure: %s]\n", p.name.c_str(), p.description.c_str(),
                          p.figure.c_str());
            out << line;
        }
    }
}

struct Usage {
    std::string kind;
    std::string message;
    std::vector<std::string> candidates;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::string& env_out) {
    CLI::App app{"Trajectories on slow manifolds of saddle type: experiment runner"};
    std::string target;
    std::string kind;
    std::string preset;
    std::vector<std::string> sets;
    std::string out_dir;
    std::string formats_text = "csv,json";
    std::string config_file;
    app.add_option("target", target, "experiment name, or 'list'")->required();
    app.add_option("kind", kind, "for 'list': experiments or presets");
    app.add_option("--preset", preset, "preset name (default: the experiment's own preset)");
    app.add_option("--set", sets, "override, path=value (dotted path or unique suffix)")->take_all();
    app.add_option("--out", out_dir, "output directory (default: $SMST_OUT/<experiment> or runs/<experiment>)");
    app.add_option("--format", formats_text, "csv, json or csv,json");
    app.add_option("--config", config_file, "JSON configuration, or a summary.json to re-run");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto usage_error = [&](const Usage& u) {
        err << error_json(u.kind, u.message, u.candidates).dump() << "\n";
        return 2;
    };

    if (target == "list") {
        if (kind != "experiments" && kind != "presets")
            return usage_error({"usage", "list needs 'experiments' or 'presets'", {"experiments", "presets"}});
        list(kind, out);
        return 0;
    }
    if (!kind.empty()) return usage_error({"usage", "unexpected argument \"" + kind + "\"", {}});
    if (!known_experiment(target))
        return usage_error({"unknown_experiment", "unknown experiment \"" + target + "\"", experiment_names()});
    const auto& info = experiments::find_experiment(target);

    Formats formats;
    Json config;
    std::string preset_label;
    Json applied = Json::object();
    try {
        formats = parse_formats(formats_text);
        if (!config_file.empty()) {
            if (!preset.empty()) return usage_error({"usage", "--preset and --config are exclusive", {}});
            std::ifstream f(config_file);
            if (!f) return usage_error({"configuration", "cannot read " + config_file, {}});
            Json doc;
            try {
                doc = Json::parse(f);
            } catch (const Json::exception& e) {
                return usage_error({"configuration", config_file + ": " + e.what(), {}});
            }
            if (doc.contains("config") && doc["config"].is_object()) {
                preset_label = doc.value("preset", "custom");
                config = doc["config"];
            } else {
                preset_label = "custom";
                config = doc;
            }
        } else {
            const std::string name = preset.empty() ? info.default_preset : preset;
            bool found = false;
            for (const auto& p : experiments::preset_registry()) found = found || p.name == name;
            if (!found) return usage_error({"unknown_preset", "unknown preset \"" + name + "\"", preset_names()});
            const auto& p = experiments::find_preset(name);
            preset_label = p.name;
            config = experiments::resolve_config(p, info.blocks);
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0)
                return usage_error({"usage", "--set expects path=value, got \"" + s + "\"", {}});
            const std::string path = s.substr(0, eq);
            std::string full;
            try {
                full = experiments::apply_override(config, path, s.substr(eq + 1));
            } catch (const Error& e) {
                return usage_error({"configuration", e.what(), experiments::config_paths(config)});
            }
            std::string pointer = "/" + full;
            for (auto& c : pointer)
                if (c == '.') c = '/';
            applied[full] = config.at(Json::json_pointer(pointer));
        }
    } catch (const Error& e) {
        return usage_error({std::string(to_string(e.kind())), e.what(), {}});
    }

    fs::path dir = out_dir;
    if (dir.empty()) dir = fs::path(env_out.empty() ? "runs" : env_out) / info.name;

    const auto start = std::chrono::steady_clock::now();
    try {
        auto result = experiments::run_with_config(info.name, config, preset_label);
        result.inputs["overrides"] = applied;
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto files = write_artifacts(result, dir, formats, seconds);
        out << info.name << ": wrote " << files.size() << " files to " << dir.string() << "\n";
        return 0;
    } catch (const Error& e) {
        Json j = error_json(std::string(to_string(e.kind())), e.what());
        if (e.state()) {
            const auto& s = *e.state();
            j["error"]["state"] = std::vector<double>(s.data(), s.data() + s.size());
        }
        if (e.index()) j["error"]["index"] = *e.index();
        j["error"]["experiment"] = info.name;
        j["error"]["config"] = config;
        err << j.dump() << "\n";
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!ec) std::ofstream(dir / "error.json") << j.dump(2) << "\n";
        return e.kind() == ErrorKind::configuration || e.kind() == ErrorKind::precondition ? 2 : 1;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
        return 1;
    }
}

}  // namespace smst::cli
