#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace smst {

enum class ErrorKind {
    precondition,
    model_evaluation,
    normal_hyperbolicity_lost,
    fold_singularity,
    newton_failure,
    singular_matrix,
    residual_divergence,
    max_steps_exceeded,
    stiffness,
    non_finite_state,
    left_domain,
    no_crossing,
    assembly_failed,
    shadowing_failed,
    configuration,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `state` carries the offending point when one exists,
/// `index` the interval / iteration / mesh index it was raised at.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what,
          std::optional<Eigen::VectorXd> state = std::nullopt,
          std::optional<long> index = std::nullopt);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::optional<Eigen::VectorXd>& state() const noexcept { return state_; }
    [[nodiscard]] std::optional<long> index() const noexcept { return index_; }

private:
    ErrorKind kind_;
    std::optional<Eigen::VectorXd> state_;
    std::optional<long> index_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what,
                       std::optional<Eigen::VectorXd> state = std::nullopt,
                       std::optional<long> index = std::nullopt);

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorKind::precondition, what);
}

std::string format_vector(const Eigen::VectorXd& v);

}  // namespace smst
