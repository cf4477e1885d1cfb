#pragma once

#include "koopman/dynamics.hpp"
#include "koopman/encoding.hpp"
#include "koopman/eval.hpp"
#include "koopman/modal.hpp"
#include "koopman/neural.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace koopman {

// Every knob of one experiment. Missing keys in a JSON document take the
// defaults below; to_json() always writes every key.
struct ExperimentConfig {
    std::string system = "benchmark";
    double dt = kDefaultDt;

    std::vector<double> seed_box_lo = {-1.5, -1.5};
    std::vector<double> seed_box_hi = {1.5, 1.5};
    int train_count = 200;
    int test_stable = 100;
    int test_unstable = 100;
    int horizon = 100;  // simulation and labeling horizon, steps
    double divergence_bound = kDivergenceBound;

    int total_observables = 40;  // split evenly between the two subspace networks
    TrainConfig train;

    std::string de_domain = "seed-box";  // seed-box | data-bbox
    double de_inflate = 0.1;
    int de_resolution = 200;
    int de_samples = 100000;
    double svd_tol = kDefaultSvdTol;

    double rbf_omega = 1.0;
    bool rbf_literal_sign = false;

    double modal_epsilon = kDefaultStabilityTol;
    std::vector<int> eval_horizons = {1, 10};
    int boundary_resolution = 61;

    unsigned threads = 0;
    std::string output_dir = "out";
    std::uint64_t master_seed = 1;

    [[nodiscard]] nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;

    // FNV-1a of the canonical JSON without output_dir, as 16 hex digits.
    [[nodiscard]] std::string hash() const;
    [[nodiscard]] Box seed_box() const;
    [[nodiscard]] DynamicalSystem make_system() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// Stable artifact names used by the stages.
namespace artifacts {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* train_pairs = "train_pairs.csv";
inline constexpr const char* train_trajectories = "train_trajectories.csv";
inline constexpr const char* test_trajectories = "test_trajectories.csv";
inline constexpr const char* error_table = "error_table.csv";
inline constexpr const char* error_series = "error_series.csv";
inline constexpr const char* boundary_summary = "boundary_summary.csv";
}  // namespace artifacts

// Model variant names, in table order.
inline const std::vector<std::string> kModelNames = {"SSOG", "SSOG+DE", "Aggregate", "Aggregate+DE", "EDMD"};
std::string model_file_stem(const std::string& name);

struct GenResult {
    SnapshotDataset train;
    std::vector<Vector> train_seeds;
    std::vector<Trajectory> test;
    std::vector<Vector> test_seeds;
};

GenResult generate_data(const ExperimentConfig& cfg);

void cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_encode(const ExperimentConfig& cfg, const std::filesystem::path& out);
ErrorTable cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& out);
std::map<std::string, BoundarySummary> cmd_boundary(const ExperimentConfig& cfg, const std::filesystem::path& out);

std::vector<NamedModel> load_models(const std::filesystem::path& out);

}  // namespace koopman
