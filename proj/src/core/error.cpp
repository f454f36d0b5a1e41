#include "smst/error.hpp"

#include <cstdio>

namespace smst {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::model_evaluation: return "model_evaluation";
        case ErrorKind::normal_hyperbolicity_lost: return "normal_hyperbolicity_lost";
        case ErrorKind::fold_singularity: return "fold_singularity";
        case ErrorKind::newton_failure: return "newton_failure";
        case ErrorKind::singular_matrix: return "singular_matrix";
        case ErrorKind::residual_divergence: return "residual_divergence";
        case ErrorKind::max_steps_exceeded: return "max_steps_exceeded";
        case ErrorKind::stiffness: return "stiffness";
        case ErrorKind::non_finite_state: return "non_finite_state";
        case ErrorKind::left_domain: return "left_domain";
        case ErrorKind::no_crossing: return "no_crossing";
        case ErrorKind::assembly_failed: return "assembly_failed";
        case ErrorKind::shadowing_failed: return "shadowing_failed";
        case ErrorKind::configuration: return "configuration";
    }
    return "unknown";
}

namespace {

std::string compose(ErrorKind kind, const std::string& what, const std::optional<Eigen::VectorXd>& state,
                    std::optional<long> index) {
    std::string out(to_string(kind));
    out += ": ";
    out += what;
    if (index) out += " [index " + std::to_string(*index) + "]";
    if (state) out += " at " + format_vector(*state);
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& what, std::optional<Eigen::VectorXd> state,
             std::optional<long> index)
    : std::runtime_error(compose(kind, what, state, index)),
      kind_(kind),
      state_(std::move(state)),
      index_(index) {}

void fail(ErrorKind kind, const std::string& what, std::optional<Eigen::VectorXd> state,
          std::optional<long> index) {
    throw Error(kind, what, std::move(state), index);
}

std::string format_vector(const Eigen::VectorXd& v) {
    std::string out = "(";
    char buf[40];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        if (i) out += ", ";
        out += buf;
    }
    return out + ")";
}

}  // namespace smst
