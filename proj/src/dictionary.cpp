#include "koopman/dictionary.hpp"

#include "koopman/error.hpp"

#include <cmath>
#include <iostream>

namespace koopman {

Matrix ObservableDictionary::eval_batch(const Matrix& xs) const {
    Matrix out(xs.rows(), lifted_dim());
    for (Eigen::Index r = 0; r < xs.rows(); ++r) out.row(r) = eval(xs.row(r).transpose()).transpose();
    return out;
}

Vector eval_lift(const ObservableDictionary& dict, const Vector& x) {
    if (x.size() != dict.state_dim()) throw ShapeError("state length does not match dictionary");
    Vector z = dict.eval(x);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z(i)))
            throw EvaluationError("observable " + std::to_string(i) + " is not finite");
    }
    return z;
}

nlohmann::json IdentityDictionary::describe() const {
    return {{"kind", "identity"}, {"n", n_}, {"m", 0}};
}

double rbf(double x, double center, double omega, bool literal_sign) {
    const double d2 = (x - center) * (x - center);
    return std::exp(literal_sign ? omega * d2 : -omega * d2);
}

RbfDictionary::RbfDictionary(RbfSpec spec, std::vector<int> degenerate_dims)
    : spec_(std::move(spec)), degenerate_(std::move(degenerate_dims)) {
    if (spec_.centers.empty()) throw PreconditionError("rbf dictionary needs at least one state");
    for (const auto& c : spec_.centers) m_ += static_cast<int>(c.size());
}

Vector RbfDictionary::eval(const Vector& x) const {
    const int n = state_dim();
    Vector z(n + m_);
    z.head(n) = x;
    int k = n;
    for (int i = 0; i < n; ++i) {
        for (const double c : spec_.centers[i]) z(k++) = rbf(x(i), c, spec_.omega, spec_.literal_sign);
    }
    return z;
}

nlohmann::json RbfDictionary::describe() const {
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : spec_.centers) centers.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    return {{"kind", "rbf"},        {"n", state_dim()},
            {"m", m_},              {"omega", spec_.omega},
            {"literal_sign", spec_.literal_sign}, {"centers", centers}};
}

DictionaryPtr make_rbf_dictionary(const Box& range, int count_per_state, double omega, bool literal_sign) {
    if (count_per_state < 1) throw PreconditionError("count_per_state must be >= 1");
    RbfSpec spec;
    spec.omega = omega;
    spec.literal_sign = literal_sign;
    std::vector<int> degenerate;
    for (Eigen::Index i = 0; i < range.dim(); ++i) {
        const double lo = range.lo(i), hi = range.hi(i);
        if (!(hi > lo)) {
            degenerate.push_back(static_cast<int>(i));
            std::cerr << "warning: rbf centers for state " << i << " collapse to " << lo << '\n';
        }
        spec.centers.push_back(count_per_state == 1 ? Vector(Vector::Constant(1, 0.5 * (lo + hi)))
                                                    : Vector(Vector::LinSpaced(count_per_state, lo, hi)));
    }
    return std::make_shared<RbfDictionary>(std::move(spec), std::move(degenerate));
}

DictionaryPtr make_rbf_dictionary(const SnapshotDataset& data, int count_per_state, double omega,
                                  bool literal_sign) {
    if (data.size() == 0) throw EmptyDatasetError("cannot place rbf centers on an empty dataset");
    Matrix all(2 * data.size(), data.dimension());
    all << data.xk, data.xkp1;
    const Box range{all.colwise().minCoeff().transpose(), all.colwise().maxCoeff().transpose()};
    return make_rbf_dictionary(range, count_per_state, omega, literal_sign);
}

FunctionDictionary::FunctionDictionary(int n, std::vector<Observable> observables, std::string label)
    : n_(n), obs_(std::move(observables)), label_(std::move(label)) {}

Vector FunctionDictionary::eval(const Vector& x) const {
    Vector z(lifted_dim());
    z.head(n_) = x;
    for (std::size_t i = 0; i < obs_.size(); ++i) z(n_ + static_cast<Eigen::Index>(i)) = obs_[i](x);
    return z;
}

nlohmann::json FunctionDictionary::describe() const {
    return {{"kind", "function"}, {"n", n_}, {"m", observable_count()}, {"label", label_}};
}

ConcatDictionary::ConcatDictionary(std::vector<DictionaryPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw PreconditionError("concat dictionary needs at least one part");
    n_ = parts_.front()->state_dim();
    for (const auto& p : parts_) {
        if (p->state_dim() != n_) throw ShapeError("concatenated dictionaries disagree on state dimension");
        m_ += p->observable_count();
    }
}

Vector ConcatDictionary::eval(const Vector& x) const {
    Vector z(lifted_dim());
    z.head(n_) = x;
    Eigen::Index k = n_;
    for (const auto& p : parts_) {
        const int m = p->observable_count();
        z.segment(k, m) = p->eval(x).tail(m);
        k += m;
    }
    return z;
}

Matrix ConcatDictionary::eval_batch(const Matrix& xs) const {
    Matrix z(xs.rows(), lifted_dim());
    z.leftCols(n_) = xs;
    Eigen::Index k = n_;
    for (const auto& p : parts_) {
        const int m = p->observable_count();
        z.middleCols(k, m) = p->eval_batch(xs).rightCols(m);
        k += m;
    }
    return z;
}

nlohmann::json ConcatDictionary::describe() const {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : parts_) parts.push_back(p->describe());
    return {{"kind", "concat"}, {"n", n_}, {"m", m_}, {"parts", parts}};
}

DictionaryPtr dictionary_from_json(const nlohmann::json& j, const CheckpointResolver& load_checkpoint) {
    const std::string kind = j.at("kind");
    if (kind == "identity") return std::make_shared<IdentityDictionary>(j.at("n").get<int>());
    if (kind == "rbf") {
        RbfSpec spec;
        spec.omega = j.at("omega");
        spec.literal_sign = j.value("literal_sign", false);
        for (const auto& c : j.at("centers")) {
            const auto v = c.get<std::vector<double>>();
            spec.centers.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        return std::make_shared<RbfDictionary>(std::move(spec));
    }
    if (kind == "concat") {
        std::vector<DictionaryPtr> parts;
        for (const auto& p : j.at("parts")) parts.push_back(dictionary_from_json(p, load_checkpoint));
        return std::make_shared<ConcatDictionary>(std::move(parts));
    }
    if (kind == "neural") {
        if (!load_checkpoint) throw ConfigError("neural dictionary requires a checkpoint resolver");
        return load_checkpoint(j.at("checkpoint").get<std::string>());
    }
    throw ConfigError("cannot rebuild dictionary of kind '" + kind + "'");
}

}  // namespace koopman
