#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "smst/core.hpp"

namespace smst::experiments {

using Json = nlohmann::ordered_json;

/// Numeric table with labelled columns. Labels have the form "name [unit]".
class Table {
public:
    Table(std::string name, std::vector<std::string> columns);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<std::string>& columns() const noexcept { return columns_; }
    [[nodiscard]] const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    [[nodiscard]] size_t size() const noexcept { return rows_.size(); }

    void add(std::vector<double> row);

    /// Column index by bare name (the label without its unit).
    [[nodiscard]] int column(std::string_view name) const;
    [[nodiscard]] std::vector<double> values(std::string_view name) const;
    [[nodiscard]] double at(size_t row, std::string_view name) const;

private:
    std::string name_;
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

/// "name [unit]" -> "name".
[[nodiscard]] std::string bare_label(std::string_view label);

struct ExperimentResult {
    std::string name;
    /// Experiment, preset, overrides and the resolved configuration.
    Json inputs;
    std::vector<Table> tables;
    std::map<std::string, double> summary;
    /// Solver reports and other per-run diagnostics.
    Json provenance = Json::object();

    Table& add_table(Table table);
    [[nodiscard]] const Table& table(std::string_view name) const;
    [[nodiscard]] bool has_table(std::string_view name) const;

    /// Stores a metric; non-finite values are rejected.
    void set_metric(const std::string& key, double value);
    [[nodiscard]] double metric(const std::string& key) const;
};

[[nodiscard]] Json to_json(const SolverReport& report);

}  // namespace smst::experiments
