#pragma once

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/quadrature.hpp"
#include "koopman/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace koopman {

inline constexpr double kDefaultSvdTol = 1e-10;
inline constexpr double kMaxRejectedFraction = 0.01;

struct PseudoInverse {
    Matrix matrix;
    int truncated = 0;          // singular values dropped
    double condition = 0.0;     // sigma_max / sigma_min over all singular values
    double sigma_max = 0.0;
};

// Moore-Penrose inverse dropping singular values below tol * sigma_max.
// Throws DegenerateDictionaryError when nothing survives.
PseudoInverse truncated_pinv(const Matrix& m, double tol);

struct EncodingMatrices {
    Matrix q;  // Q_ij = <g_i o f, g_j>
    Matrix r;  // R_ij = <g_i, g_j>
    Eigen::Index nodes = 0;
    Eigen::Index rejected = 0;  // nodes where f or the lift of f was not finite
    std::vector<Vector> rejected_nodes;
};

// R_ij = integral over the domain of g_i g_j, symmetrized after assembly.
Matrix compute_R(const ObservableDictionary& dict, const IntegrationDomain& domain, unsigned threads = 0);

// Q_ij = integral of g_i(f(x)) g_j(x). The composition is on the first index.
Matrix compute_Q(const ObservableDictionary& dict, const DynamicalSystem& system,
                 const IntegrationDomain& domain, unsigned threads = 0);

// Q and R over the same accepted node set.
EncodingMatrices encoding_matrices(const ObservableDictionary& dict, const DynamicalSystem& system,
                                   const IntegrationDomain& domain, unsigned threads = 0);

enum class Provenance : std::uint8_t { direct_encoding, edmd, learned_linear_layer };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct LiftedLinearModel {
    DictionaryPtr dictionary;
    Matrix a;
    Provenance provenance = Provenance::direct_encoding;
    nlohmann::json diagnostics = nlohmann::json::object();

    [[nodiscard]] int state_dim() const { return dictionary->state_dim(); }
    [[nodiscard]] int lifted_dim() const { return static_cast<int>(a.rows()); }
};

// A = Q pinv(R). Depends only on the dictionary, f, and the domain.
LiftedLinearModel direct_encode(DictionaryPtr dict, const DynamicalSystem& system,
                                const IntegrationDomain& domain, double svd_tol = kDefaultSvdTol,
                                unsigned threads = 0);

// Least squares min_A sum |z_{k+1} - A z_k|^2 via normal equations.
LiftedLinearModel edmd_fit(DictionaryPtr dict, const SnapshotDataset& data, double svd_tol = kDefaultSvdTol);

// Direct encoding of the frozen joint dictionary [x; g_u; g_s].
LiftedLinearModel relift_linear_layer(DictionaryPtr ssog, const DynamicalSystem& system,
                                      const IntegrationDomain& domain, double svd_tol = kDefaultSvdTol,
                                      unsigned threads = 0);

// Starting from `box`, shrinks toward the center (5% per round) until f maps at
// least 99% of the quadrature nodes to finite values.
IntegrationDomain resolve_domain(const Box& box, const DynamicalSystem& system, int resolution,
                                 int samples, std::uint64_t seed);

nlohmann::json model_to_json(const LiftedLinearModel& model);
LiftedLinearModel model_from_json(const nlohmann::json& j, const CheckpointResolver& load_checkpoint = {});

}  // namespace koopman
