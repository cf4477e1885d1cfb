#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

// Base of every library error. `kind()` is a short stable token used by the
// CLI for its one-line machine-readable failure report.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    [[nodiscard]] virtual const char* kind() const noexcept { return "error"; }
};

#define KOOPMAN_DEFINE_ERROR(Name, token)                                   \
    class Name : public Error {                                             \
    public:                                                                 \
        using Error::Error;                                                 \
        [[nodiscard]] const char* kind() const noexcept override { return token; } \
    }

KOOPMAN_DEFINE_ERROR(PreconditionError, "precondition");
KOOPMAN_DEFINE_ERROR(ShapeError, "shape");
KOOPMAN_DEFINE_ERROR(EvaluationError, "evaluation");
KOOPMAN_DEFINE_ERROR(EmptyDatasetError, "empty_dataset");
KOOPMAN_DEFINE_ERROR(TrainingError, "training");
KOOPMAN_DEFINE_ERROR(DegenerateDictionaryError, "degenerate_dictionary");
KOOPMAN_DEFINE_ERROR(DomainError, "domain");
KOOPMAN_DEFINE_ERROR(EigenError, "eigen");
KOOPMAN_DEFINE_ERROR(DefectiveMatrixError, "defective_matrix");
KOOPMAN_DEFINE_ERROR(ConfigError, "config");
KOOPMAN_DEFINE_ERROR(IoError, "io");

#undef KOOPMAN_DEFINE_ERROR

}  // namespace koopman
