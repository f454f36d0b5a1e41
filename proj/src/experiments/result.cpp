#include "smst/experiments/result.hpp"

#include <cmath>

namespace smst::experiments {

std::string bare_label(std::string_view label) {
    const auto pos = label.find(" [");
    return std::string(label.substr(0, pos));
}

Table::Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {
    require(!columns_.empty(), "table needs at least one column");
    for (const auto& c : columns_)
        require(c.find('[') != std::string::npos && c.back() == ']', "column label without unit: " + c);
}

void Table::add(std::vector<double> row) {
    require(row.size() == columns_.size(),
            "row width " + std::to_string(row.size()) + " differs from column count in table " + name_);
    rows_.push_back(std::move(row));
}

int Table::column(std::string_view name) const {
    for (size_t i = 0; i < columns_.size(); ++i)
        if (bare_label(columns_[i]) == name) return static_cast<int>(i);
    fail(ErrorKind::precondition, "table " + name_ + " has no column " + std::string(name));
}

std::vector<double> Table::values(std::string_view name) const {
    const auto c = static_cast<size_t>(column(name));
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[c]);
    return out;
}

double Table::at(size_t row, std::string_view name) const {
    require(row < rows_.size(), "table row out of range");
    return rows_[row][static_cast<size_t>(column(name))];
}

Table& ExperimentResult::add_table(Table table) {
    require(!has_table(table.name()), "duplicate table " + table.name());
    tables.push_back(std::move(table));
    return tables.back();
}

const Table& ExperimentResult::table(std::string_view table_name) const {
    for (const auto& t : tables)
        if (t.name() == table_name) return t;
    fail(ErrorKind::precondition, "result " + name + " has no table " + std::string(table_name));
}

bool ExperimentResult::has_table(std::string_view table_name) const {
    for (const auto& t : tables)
        if (t.name() == table_name) return true;
    return false;
}

void ExperimentResult::set_metric(const std::string& key, double value) {
    if (!std::isfinite(value)) fail(ErrorKind::precondition, "metric " + key + " is not finite");
    summary[key] = value;
}

double ExperimentResult::metric(const std::string& key) const {
    auto it = summary.find(key);
    if (it == summary.end()) fail(ErrorKind::precondition, "result " + name + " has no metric " + key);
    return it->second;
}

Json to_json(const SolverReport& report) {
    Json j;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["final_residual"] = report.final_residual;
    j["tolerance"] = report.tolerance;
    j["damping_halvings"] = report.damping_halvings;
    j["residual_history"] = report.residual_history;
    j["step_norms"] = report.step_norms;
    if (!report.message.empty()) j["message"] = report.message;
    return j;
}

}  // namespace smst::experiments
