#include "koopman/quadrature.hpp"

#include "koopman/error.hpp"
#include "koopman/rng.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace koopman {

std::string to_string(QuadratureScheme s) {
    return s == QuadratureScheme::tensor_trapezoid ? "tensor-trapezoid" : "monte-carlo";
}

QuadratureScheme quadrature_from_string(const std::string& s) {
    if (s == "tensor-trapezoid") return QuadratureScheme::tensor_trapezoid;
    if (s == "monte-carlo") return QuadratureScheme::monte_carlo;
    throw ConfigError("unknown quadrature scheme '" + s + "'");
}

IntegrationDomain IntegrationDomain::for_box(Box box, int resolution, int samples, std::uint64_t seed) {
    IntegrationDomain d;
    d.scheme = box.dim() <= 3 ? QuadratureScheme::tensor_trapezoid : QuadratureScheme::monte_carlo;
    d.box = std::move(box);
    d.resolution = resolution;
    d.samples = samples;
    d.seed = seed;
    return d;
}

void IntegrationDomain::validate() const {
    if (box.dim() == 0 || box.hi.size() != box.lo.size()) throw DomainError("domain box is empty");
    if (!((box.hi.array() > box.lo.array()).all())) throw DomainError("domain requires lo < hi on every axis");
    if (scheme == QuadratureScheme::tensor_trapezoid && resolution < 2)
        throw DomainError("trapezoid resolution must be >= 2");
    if (scheme == QuadratureScheme::monte_carlo && samples < 1) throw DomainError("monte carlo needs samples");
}

nlohmann::json IntegrationDomain::to_json() const {
    return {{"lo", std::vector<double>(box.lo.data(), box.lo.data() + box.lo.size())},
            {"hi", std::vector<double>(box.hi.data(), box.hi.data() + box.hi.size())},
            {"scheme", to_string(scheme)},
            {"resolution", resolution},
            {"samples", samples},
            {"seed", seed}};
}

IntegrationDomain IntegrationDomain::from_json(const nlohmann::json& j) {
    IntegrationDomain d;
    const auto lo = j.at("lo").get<std::vector<double>>();
    const auto hi = j.at("hi").get<std::vector<double>>();
    d.box = {Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
    d.scheme = quadrature_from_string(j.at("scheme"));
    d.resolution = j.value("resolution", d.resolution);
    d.samples = j.value("samples", d.samples);
    d.seed = j.value("seed", d.seed);
    return d;
}

QuadratureRule make_rule(const IntegrationDomain& domain) {
    domain.validate();
    const Eigen::Index n = domain.box.dim();
    QuadratureRule rule;
    if (domain.scheme == QuadratureScheme::monte_carlo) {
        Rng rng(domain.seed);
        rule.nodes.resize(domain.samples, n);
        for (Eigen::Index r = 0; r < domain.samples; ++r)
            for (Eigen::Index i = 0; i < n; ++i)
                rule.nodes(r, i) = rng.uniform(domain.box.lo(i), domain.box.hi(i));
        rule.weights = Vector::Constant(domain.samples, domain.box.volume() / domain.samples);
        return rule;
    }
    const int p = domain.resolution;
    std::vector<std::pair<Vector, Vector>> axes;
    Eigen::Index total = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        axes.push_back(trapezoid_1d(domain.box.lo(i), domain.box.hi(i), p));
        total *= p;
    }
    rule.nodes.resize(total, n);
    rule.weights.resize(total);
    std::vector<int> idx(n, 0);
    for (Eigen::Index k = 0; k < total; ++k) {
        double w = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            rule.nodes(k, i) = axes[i].first(idx[i]);
            w *= axes[i].second(idx[i]);
        }
        rule.weights(k) = w;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (++idx[i] < p) break;
            idx[i] = 0;
        }
    }
    return rule;
}

Matrix blocked_pairwise_sum(Eigen::Index count, const std::function<Matrix(Eigen::Index)>& block,
                            unsigned threads) {
    if (count <= 0) throw PreconditionError("nothing to sum");
    std::vector<Matrix> partial(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, count));
    if (threads <= 1) {
        for (Eigen::Index i = 0; i < count; ++i) partial[i] = block(i);
    } else {
        std::atomic<Eigen::Index> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (Eigen::Index i = next++; i < count; i = next++) {
                    try {
                        partial[i] = block(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    for (Eigen::Index stride = 1; stride < count; stride *= 2)
        for (Eigen::Index i = 0; i + stride < count; i += 2 * stride) partial[i] += partial[i + stride];
    return partial[0];
}

}  // namespace koopman
