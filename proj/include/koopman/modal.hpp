#pragma once

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/encoding.hpp"
#include "koopman/types.hpp"

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace koopman {

inline constexpr double kDefaultStabilityTol = 1e-3;

enum class ModeClass : std::uint8_t { unstable, marginal, stable };
std::string to_string(ModeClass c);

// One real mode block: a single real eigenvector or the (Re, Im) pair of a
// complex-conjugate eigenvector.
struct ModeBlock {
    Eigen::Index column = 0;  // first column in V / W
    int size = 1;             // 1 or 2
    ModeClass cls = ModeClass::stable;
};

// A = V D V^{-1} in real block form, W^T = V^{-1}.
struct ModalDecomposition {
    ComplexVector eigenvalues;        // in solver order, conjugates adjacent
    std::vector<ModeClass> classes;   // per eigenvalue
    Matrix v;
    Matrix w;
    Matrix d_real;
    std::vector<ModeBlock> blocks;
    double epsilon = kDefaultStabilityTol;
    double reconstruction_residual = 0.0;  // relative Frobenius

    std::vector<Eigen::Index> unstable_columns;
    Matrix unstable_left;        // raw W_u (lifted_dim x k)
    Matrix unstable_orthonormal; // thin-QR basis of span(W_u)

    [[nodiscard]] std::vector<int> indices(ModeClass c) const;
};

ModeClass classify(std::complex<double> lambda, double epsilon);

// Throws EigenError if the solver fails and DefectiveMatrixError when the
// modal re-sum misses A by more than `reconstruction_tol` (relative Frobenius).
ModalDecomposition eigendecompose(const Matrix& a, double epsilon = kDefaultStabilityTol,
                                  double reconstruction_tol = 1e-6);

enum class LeftBasis : std::uint8_t { raw, orthonormal };

// W_u^T z; empty when there are no unstable modes.
Vector project_unstable(const ModalDecomposition& decomp, const Vector& z, LeftBasis basis = LeftBasis::raw);

// ||W_u^T z|| / ||z|| with orthonormalized W_u. nullopt when ||z|| < 1e-300.
std::optional<double> instability_quotient_lifted(const ModalDecomposition& decomp, const Vector& z);
std::optional<double> instability_quotient(const ModalDecomposition& decomp, const ObservableDictionary& dict,
                                           const Vector& x);

struct BoundarySummary {
    double mean_xi_stable = 0.0;    // over truth-stable nodes
    double mean_xi_unstable = 0.0;  // over truth-unstable nodes
    double contrast = 0.0;          // unstable minus stable
    double accuracy = 0.0;          // xi > threshold classifies as unstable
    double threshold = 0.5;
    Eigen::Index undefined_nodes = 0;
};

struct BoundaryField {
    Box box;
    int resolution = 0;
    Matrix nodes;  // rows, first axis fastest
    Vector xi;     // NaN marks an undefined node
    std::vector<Label> truth;  // empty when no ground truth was attached
    std::optional<BoundarySummary> summary;
};

// Truth labels by simulating forward from every node.
std::vector<Label> truth_labels(const DynamicalSystem& system, const Matrix& nodes, int horizon);

BoundaryField ground_truth_field(const DynamicalSystem& system, const Box& box, int resolution, int horizon);

BoundaryField boundary_grid(const LiftedLinearModel& model, const Box& box, int resolution,
                            double epsilon = kDefaultStabilityTol, std::span<const Label> truth = {});
BoundaryField boundary_grid(const ModalDecomposition& decomp, const ObservableDictionary& dict, const Box& box,
                            int resolution, std::span<const Label> truth = {});

BoundarySummary summarize(const Vector& xi, std::span<const Label> truth, double threshold = 0.5);

// `x0,...,x{n-1},xi,truth_label`
void write_boundary_csv(std::ostream& os, const BoundaryField& field);
// `re,im,abs,class`
void write_eigenvalues_csv(std::ostream& os, const ModalDecomposition& decomp);

}  // namespace koopman
