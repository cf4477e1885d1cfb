#pragma once

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace koopman {

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

// Feed-forward network, ReLU on hidden layers and identity on the output.
struct MlpParams {
    std::vector<DenseLayer> layers;

    // Fan-in scaled uniform init (bound 1/sqrt(fan_in)) for weights and biases.
    static MlpParams init(const std::vector<int>& sizes, std::uint64_t seed);
    static MlpParams zeros(const std::vector<int>& sizes);

    [[nodiscard]] std::vector<int> sizes() const;
    [[nodiscard]] int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
    [[nodiscard]] int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
    [[nodiscard]] Eigen::Index parameter_count() const;
    [[nodiscard]] bool all_finite() const;

    // Layer by layer: weight (column-major) then bias.
    [[nodiscard]] Vector flatten() const;
    void unflatten(const Eigen::Ref<const Vector>& flat);
};

// g(x) for one state.
Vector forward(const MlpParams& net, const Vector& x);
// Column-wise forward: xs is n x N, returns m x N.
Matrix forward_columns(const MlpParams& net, const Matrix& xs);

// Mean over every sample and lifted coordinate of (A z_k - z_{k+1})^2.
// zk, zkp1 hold one lifted state per row.
double lifted_mse(const Matrix& zk, const Matrix& zkp1, const Matrix& a);

struct SubspaceGradients {
    double loss = 0.0;
    MlpParams network;  // same shapes as the network, holding dL/dparam
    Matrix linear;      // dL/dA
};

// Exact reverse-mode gradients of lifted_mse for z = [x; g(x)] where both
// z_k and z_{k+1} are produced by the current network. xk, xkp1: rows are states.
SubspaceGradients subspace_gradients(const MlpParams& net, const Matrix& linear, const Matrix& xk,
                                     const Matrix& xkp1);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 2000;
    int batch_size = 0;  // 0: full batch up to full_batch_limit, else default_batch
    int full_batch_limit = 4096;
    int default_batch = 1024;
    std::vector<int> hidden = {16, 10};
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    [[nodiscard]] nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct AdamMoments {
    Vector first;
    Vector second;
};

// Bias-corrected Adam update of `params` in place; t is the 1-based step.
void adam_step(Vector& params, const Vector& grads, AdamMoments& moments, int t, const TrainConfig& cfg);

enum class Subspace : std::uint8_t { unstable, stable, aggregate };
std::string to_string(Subspace s);
Subspace subspace_from_string(const std::string& s);

struct SubspaceModel {
    MlpParams network;
    Matrix linear;  // A_*, (n+m) x (n+m)
    Subspace tag = Subspace::aggregate;
    std::vector<double> loss_history;  // one entry per epoch, on that epoch's batch
    TrainConfig config;
};

// Joint training of the observable network and the linear layer: each epoch
// samples a batch, lifts both ends with the current network, and takes one
// Adam step on all parameters. Throws TrainingError on a non-finite loss.
SubspaceModel train_subspace_model(const SnapshotDataset& subset, int observables, Subspace tag,
                                   const TrainConfig& cfg);

nlohmann::json checkpoint_to_json(const SubspaceModel& model);
SubspaceModel checkpoint_from_json(const nlohmann::json& j);

// [x; g(x)] with a frozen network.
class NeuralDictionary final : public ObservableDictionary {
public:
    NeuralDictionary(MlpParams net, std::string source = {});
    int state_dim() const override { return net_.input_dim(); }
    int observable_count() const override { return net_.output_dim(); }
    Vector eval(const Vector& x) const override;
    Matrix eval_batch(const Matrix& xs) const override;
    std::string kind() const override { return "neural"; }
    nlohmann::json describe() const override;

    [[nodiscard]] const MlpParams& network() const { return net_; }

private:
    const MlpParams net_;
    std::string source_;
};

// Frozen joint dictionary [x; g_u(x); g_s(x)].
DictionaryPtr build_ssog(const MlpParams& unstable_net, const MlpParams& stable_net,
                         const std::string& unstable_ref = {}, const std::string& stable_ref = {});

}  // namespace koopman
