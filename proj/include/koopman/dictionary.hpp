#pragma once

#include "koopman/dynamics.hpp"
#include "koopman/types.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace koopman {

// A finite ordered set of scalar observables. Concrete dictionaries put the
// raw state first, so eval(x).head(n) == x; the observables g_1..g_m follow.
class ObservableDictionary {
public:
    virtual ~ObservableDictionary() = default;

    [[nodiscard]] virtual int state_dim() const = 0;
    [[nodiscard]] virtual int observable_count() const = 0;
    [[nodiscard]] int lifted_dim() const { return state_dim() + observable_count(); }

    [[nodiscard]] virtual Vector eval(const Vector& x) const = 0;
    // Row-wise lift of a sample matrix (rows are states).
    [[nodiscard]] virtual Matrix eval_batch(const Matrix& xs) const;

    [[nodiscard]] virtual std::string kind() const = 0;
    [[nodiscard]] virtual nlohmann::json describe() const = 0;
};

using DictionaryPtr = std::shared_ptr<const ObservableDictionary>;

// Lifts x and checks the result. Throws EvaluationError naming the first
// non-finite observable.
Vector eval_lift(const ObservableDictionary& dict, const Vector& x);

// The state itself, m = 0.
class IdentityDictionary final : public ObservableDictionary {
public:
    explicit IdentityDictionary(int n) : n_(n) {}
    int state_dim() const override { return n_; }
    int observable_count() const override { return 0; }
    Vector eval(const Vector& x) const override { return x; }
    Matrix eval_batch(const Matrix& xs) const override { return xs; }
    std::string kind() const override { return "identity"; }
    nlohmann::json describe() const override;

private:
    int n_;
};

// Univariate radial basis functions, count_per_state per state variable.
struct RbfSpec {
    std::vector<Vector> centers;  // centers[i] holds the centers for state i
    double omega = 1.0;
    // false: exp(-omega (x_i - c)^2). true: the growing form exp(+omega (x_i - c)^2).
    bool literal_sign = false;
};

class RbfDictionary final : public ObservableDictionary {
public:
    explicit RbfDictionary(RbfSpec spec, std::vector<int> degenerate_dims = {});
    int state_dim() const override { return static_cast<int>(spec_.centers.size()); }
    int observable_count() const override { return m_; }
    Vector eval(const Vector& x) const override;
    std::string kind() const override { return "rbf"; }
    nlohmann::json describe() const override;

    [[nodiscard]] const RbfSpec& spec() const { return spec_; }
    // State dimensions whose data range collapsed to a point.
    [[nodiscard]] const std::vector<int>& degenerate_dims() const { return degenerate_; }

private:
    RbfSpec spec_;
    int m_ = 0;
    std::vector<int> degenerate_;
};

double rbf(double x, double center, double omega, bool literal_sign = false);

// Centers placed uniformly (inclusive endpoints) over each state's range.
DictionaryPtr make_rbf_dictionary(const Box& range, int count_per_state, double omega,
                                  bool literal_sign = false);
DictionaryPtr make_rbf_dictionary(const SnapshotDataset& data, int count_per_state, double omega,
                                  bool literal_sign = false);

// State prefix plus user-supplied scalar observables. Used for analytic
// dictionaries such as {x, x^2, x^4}.
class FunctionDictionary final : public ObservableDictionary {
public:
    using Observable = std::function<double(const Vector&)>;
    FunctionDictionary(int n, std::vector<Observable> observables, std::string label = "function");
    int state_dim() const override { return n_; }
    int observable_count() const override { return static_cast<int>(obs_.size()); }
    Vector eval(const Vector& x) const override;
    std::string kind() const override { return "function"; }
    nlohmann::json describe() const override;

private:
    int n_;
    std::vector<Observable> obs_;
    std::string label_;
};

// [x; non-state part of parts[0]; non-state part of parts[1]; ...].
class ConcatDictionary final : public ObservableDictionary {
public:
    explicit ConcatDictionary(std::vector<DictionaryPtr> parts);
    int state_dim() const override { return n_; }
    int observable_count() const override { return m_; }
    Vector eval(const Vector& x) const override;
    Matrix eval_batch(const Matrix& xs) const override;
    std::string kind() const override { return "concat"; }
    nlohmann::json describe() const override;

    [[nodiscard]] const std::vector<DictionaryPtr>& parts() const { return parts_; }

private:
    std::vector<DictionaryPtr> parts_;
    int n_ = 0;
    int m_ = 0;
};

// Rebuilds a dictionary from describe(). Neural parts are resolved through
// `load_checkpoint`, which maps the stored reference to a dictionary.
using CheckpointResolver = std::function<DictionaryPtr(const std::string& ref)>;
DictionaryPtr dictionary_from_json(const nlohmann::json& j, const CheckpointResolver& load_checkpoint = {});

}  // namespace koopman
