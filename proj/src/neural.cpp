#include "koopman/neural.hpp"

#include "koopman/error.hpp"
#include "koopman/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace koopman {

MlpParams MlpParams::init(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw PreconditionError("network needs at least input and output sizes");
    Rng rng(seed);
    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        DenseLayer layer{Matrix(out, in), Vector(out)};
        for (Eigen::Index c = 0; c < in; ++c)
            for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

MlpParams MlpParams::zeros(const std::vector<int>& sizes) {
    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        p.layers.push_back({Matrix::Zero(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])});
    return p;
}

std::vector<int> MlpParams::sizes() const {
    std::vector<int> s{input_dim()};
    for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
}

Eigen::Index MlpParams::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

bool MlpParams::all_finite() const {
    for (const auto& l : layers)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

Vector MlpParams::flatten() const {
    Vector flat(parameter_count());
    Eigen::Index k = 0;
    for (const auto& l : layers) {
        flat.segment(k, l.weight.size()) = l.weight.reshaped();
        k += l.weight.size();
        flat.segment(k, l.bias.size()) = l.bias;
        k += l.bias.size();
    }
    return flat;
}

void MlpParams::unflatten(const Eigen::Ref<const Vector>& flat) {
    if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
    Eigen::Index k = 0;
    for (auto& l : layers) {
        l.weight.reshaped() = flat.segment(k, l.weight.size());
        k += l.weight.size();
        l.bias = flat.segment(k, l.bias.size());
        k += l.bias.size();
    }
}

Matrix forward_columns(const MlpParams& net, const Matrix& xs) {
    if (xs.rows() != net.input_dim()) throw ShapeError("network input has the wrong dimension");
    Matrix a = xs;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Matrix z = layer.weight * a;
        z.colwise() += layer.bias;
        a = (l + 1 < net.layers.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

Vector forward(const MlpParams& net, const Vector& x) {
    if (!net.all_finite()) throw EvaluationError("network has non-finite parameters");
    Vector g = forward_columns(net, x);
    if (!g.allFinite()) throw EvaluationError("network output is not finite");
    return g;
}

double lifted_mse(const Matrix& zk, const Matrix& zkp1, const Matrix& a) {
    if (zk.rows() != zkp1.rows() || zk.cols() != zkp1.cols())
        throw ShapeError("lifted batches differ in shape");
    if (a.rows() != zk.cols() || a.cols() != zk.cols()) throw ShapeError("linear layer does not match lift");
    if (zk.size() == 0) throw ShapeError("empty batch");
    const Matrix residual = zk * a.transpose() - zkp1;
    return residual.squaredNorm() / static_cast<double>(residual.size());
}

namespace {

// Activations of every layer for a column batch; acts[0] is the input.
struct ForwardCache {
    std::vector<Matrix> pre;
    std::vector<Matrix> acts;
};

ForwardCache forward_cached(const MlpParams& net, const Matrix& xs) {
    ForwardCache c;
    c.acts.push_back(xs);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Matrix z = layer.weight * c.acts.back();
        z.colwise() += layer.bias;
        c.acts.push_back(l + 1 < net.layers.size() ? Matrix(z.cwiseMax(0.0)) : z);
        c.pre.push_back(std::move(z));
    }
    return c;
}

// Accumulates parameter gradients for an upstream gradient on the output.
void backward(const MlpParams& net, const ForwardCache& c, Matrix delta, MlpParams& grad) {
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        grad.layers[l].weight.noalias() += delta * c.acts[l].transpose();
        grad.layers[l].bias += delta.rowwise().sum();
        if (l == 0) break;
        Matrix up = net.layers[l].weight.transpose() * delta;
        // ReLU subgradient at exactly 0 is taken as 0.
        delta = up.cwiseProduct((c.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
}

}  // namespace

SubspaceGradients subspace_gradients(const MlpParams& net, const Matrix& linear, const Matrix& xk,
                                     const Matrix& xkp1) {
    const Eigen::Index n = net.input_dim(), m = net.output_dim(), d = n + m;
    if (xk.cols() != n || xkp1.cols() != n || xk.rows() != xkp1.rows())
        throw ShapeError("batch does not match network input");
    if (linear.rows() != d || linear.cols() != d) throw ShapeError("linear layer does not match lift");
    const Eigen::Index batch = xk.rows();
    if (batch == 0) throw ShapeError("empty batch");

    const ForwardCache ck = forward_cached(net, xk.transpose());
    const ForwardCache cp = forward_cached(net, xkp1.transpose());
    Matrix zk(d, batch), zp(d, batch);
    zk << xk.transpose(), ck.acts.back();
    zp << xkp1.transpose(), cp.acts.back();

    const Matrix residual = linear * zk - zp;
    SubspaceGradients g;
    const double count = static_cast<double>(residual.size());
    g.loss = residual.squaredNorm() / count;
    const Matrix d_res = (2.0 / count) * residual;
    g.linear = d_res * zk.transpose();

    g.network = MlpParams::zeros(net.sizes());
    const Matrix d_zk = linear.transpose() * d_res;
    backward(net, ck, d_zk.bottomRows(m), g.network);
    backward(net, cp, -d_res.bottomRows(m), g.network);
    return g;
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"epochs", epochs},
            {"batch_size", batch_size},       {"full_batch_limit", full_batch_limit},
            {"default_batch", default_batch}, {"hidden", hidden},
            {"seed", seed},                   {"beta1", beta1},
            {"beta2", beta2},                 {"epsilon", epsilon}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.full_batch_limit = j.value("full_batch_limit", c.full_batch_limit);
    c.default_batch = j.value("default_batch", c.default_batch);
    c.hidden = j.value("hidden", c.hidden);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    return c;
}

void adam_step(Vector& params, const Vector& grads, AdamMoments& moments, int t, const TrainConfig& cfg) {
    if (t < 1) throw PreconditionError("adam step index starts at 1");
    if (grads.size() != params.size()) throw ShapeError("gradient length differs from parameters");
    if (moments.first.size() != params.size()) {
        moments.first = Vector::Zero(params.size());
        moments.second = Vector::Zero(params.size());
    }
    moments.first = cfg.beta1 * moments.first + (1.0 - cfg.beta1) * grads;
    moments.second = cfg.beta2 * moments.second + (1.0 - cfg.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    params.array() -= cfg.learning_rate * (moments.first.array() / c1) /
                      ((moments.second.array() / c2).sqrt() + cfg.epsilon);
}

std::string to_string(Subspace s) {
    switch (s) {
        case Subspace::unstable: return "u";
        case Subspace::stable: return "s";
        case Subspace::aggregate: return "aggregate";
    }
    return "?";
}

Subspace subspace_from_string(const std::string& s) {
    if (s == "u") return Subspace::unstable;
    if (s == "s") return Subspace::stable;
    if (s == "aggregate") return Subspace::aggregate;
    throw ConfigError("unknown subspace tag '" + s + "'");
}

SubspaceModel train_subspace_model(const SnapshotDataset& subset, int observables, Subspace tag,
                                   const TrainConfig& cfg) {
    if (subset.size() == 0) throw PreconditionError("cannot train on an empty subset");
    if (observables < 1) throw PreconditionError("need at least one observable");
    if (!(cfg.learning_rate > 0) || cfg.epochs < 1) throw PreconditionError("invalid training config");
    if (tag != Subspace::aggregate) {
        const Label want = tag == Subspace::stable ? Label::stable : Label::unstable;
        if (subset.count(want) != subset.size())
            throw PreconditionError("subspace training set must carry a single label");
    }

    const int n = subset.dimension();
    const int d = n + observables;
    std::vector<int> sizes{n};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(observables);

    const std::uint64_t seed = derive_seed(cfg.seed, "train/" + to_string(tag));
    SubspaceModel model;
    model.tag = tag;
    model.config = cfg;
    model.network = MlpParams::init(sizes, derive_seed(seed, "network"));
    {
        Rng rng(derive_seed(seed, "linear"));
        const double bound = 1.0 / std::sqrt(static_cast<double>(d));
        model.linear.resize(d, d);
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index r = 0; r < d; ++r) model.linear(r, c) = rng.uniform(-bound, bound);
    }

    const Eigen::Index total = subset.size();
    Eigen::Index batch = cfg.batch_size > 0 ? cfg.batch_size
                         : total <= cfg.full_batch_limit ? total
                                                         : cfg.default_batch;
    batch = std::min(batch, total);

    const Eigen::Index net_count = model.network.parameter_count();
    Vector params(net_count + model.linear.size());
    params << model.network.flatten(), model.linear.reshaped();
    AdamMoments moments;
    Rng sampler(derive_seed(seed, "batches"));
    std::vector<Eigen::Index> order(total);
    std::iota(order.begin(), order.end(), 0);
    Matrix xk(batch, n), xkp1(batch, n);
    model.loss_history.reserve(cfg.epochs);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch == total) {
            xk = subset.xk;
            xkp1 = subset.xkp1;
        } else {
            // Partial Fisher-Yates: first `batch` entries become the sample.
            for (Eigen::Index i = 0; i < batch; ++i) {
                const auto j = i + static_cast<Eigen::Index>(sampler.below(total - i));
                std::swap(order[i], order[j]);
                xk.row(i) = subset.xk.row(order[i]);
                xkp1.row(i) = subset.xkp1.row(order[i]);
            }
        }
        const SubspaceGradients g = subspace_gradients(model.network, model.linear, xk, xkp1);
        model.loss_history.push_back(g.loss);
        if (!std::isfinite(g.loss)) {
            std::ostringstream msg;
            msg << "loss became non-finite at epoch " << epoch << "; recent losses:";
            const std::size_t from = model.loss_history.size() > 5 ? model.loss_history.size() - 5 : 0;
            for (std::size_t i = from; i < model.loss_history.size(); ++i) msg << ' ' << model.loss_history[i];
            throw TrainingError(msg.str());
        }
        Vector grads(params.size());
        grads << g.network.flatten(), g.linear.reshaped();
        adam_step(params, grads, moments, epoch, cfg);
        model.network.unflatten(params.head(net_count));
        model.linear.reshaped() = params.tail(model.linear.size());
    }
    return model;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = j.at("rows"), cols = j.at("cols");
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw IoError("matrix json: size mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
    return m;
}

}  // namespace

nlohmann::json checkpoint_to_json(const SubspaceModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.network.layers) {
        layers.push_back({{"weight", matrix_json(l.weight)},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    return {{"layer_sizes", model.network.sizes()},
            {"layers", layers},
            {"linear", matrix_json(model.linear)},
            {"subspace", to_string(model.tag)},
            {"seed", model.config.seed},
            {"config", model.config.to_json()},
            {"final_loss", model.loss_history.empty() ? 0.0 : model.loss_history.back()}};
}

SubspaceModel checkpoint_from_json(const nlohmann::json& j) {
    SubspaceModel model;
    for (const auto& l : j.at("layers")) {
        const auto bias = l.at("bias").get<std::vector<double>>();
        model.network.layers.push_back(
            {matrix_from_json(l.at("weight")),
             Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size()))});
    }
    if (model.network.layers.empty()) throw IoError("checkpoint has no layers");
    if (model.network.sizes() != j.at("layer_sizes").get<std::vector<int>>())
        throw IoError("checkpoint layer sizes disagree with weights");
    model.linear = matrix_from_json(j.at("linear"));
    model.tag = subspace_from_string(j.at("subspace"));
    model.config = TrainConfig::from_json(j.at("config"));
    return model;
}

NeuralDictionary::NeuralDictionary(MlpParams net, std::string source)
    : net_(std::move(net)), source_(std::move(source)) {
    if (net_.layers.empty()) throw PreconditionError("empty network");
}

Vector NeuralDictionary::eval(const Vector& x) const {
    Vector z(lifted_dim());
    z << x, forward_columns(net_, x);
    return z;
}

Matrix NeuralDictionary::eval_batch(const Matrix& xs) const {
    Matrix z(xs.rows(), lifted_dim());
    z << xs, forward_columns(net_, xs.transpose()).transpose();
    return z;
}

nlohmann::json NeuralDictionary::describe() const {
    return {{"kind", "neural"},
            {"n", state_dim()},
            {"m", observable_count()},
            {"layer_sizes", net_.sizes()},
            {"checkpoint", source_}};
}

DictionaryPtr build_ssog(const MlpParams& unstable_net, const MlpParams& stable_net,
                         const std::string& unstable_ref, const std::string& stable_ref) {
    if (unstable_net.input_dim() != stable_net.input_dim())
        throw ShapeError("subspace networks disagree on state dimension");
    return std::make_shared<ConcatDictionary>(std::vector<DictionaryPtr>{
        std::make_shared<NeuralDictionary>(unstable_net, unstable_ref),
        std::make_shared<NeuralDictionary>(stable_net, stable_ref)});
}

}  // namespace koopman
