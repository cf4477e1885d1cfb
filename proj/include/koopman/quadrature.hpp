#pragma once

#include "koopman/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>

namespace koopman {

enum class QuadratureScheme : std::uint8_t { tensor_trapezoid, monte_carlo };
std::string to_string(QuadratureScheme s);
QuadratureScheme quadrature_from_string(const std::string& s);

// Box X over which inner products are integrated.
struct IntegrationDomain {
    Box box;
    QuadratureScheme scheme = QuadratureScheme::tensor_trapezoid;
    int resolution = 200;       // points per axis (trapezoid)
    int samples = 100000;       // monte carlo
    std::uint64_t seed = 0;     // monte carlo

    // Trapezoid for n <= 3, Monte Carlo above.
    static IntegrationDomain for_box(Box box, int resolution = 200, int samples = 100000,
                                     std::uint64_t seed = 0);
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static IntegrationDomain from_json(const nlohmann::json& j);
};

struct QuadratureRule {
    Matrix nodes;    // one node per row
    Vector weights;
};

QuadratureRule make_rule(const IntegrationDomain& domain);

// 1-D trapezoid nodes/weights on [lo, hi].
template <typename Scalar>
std::pair<VectorT<Scalar>, VectorT<Scalar>> trapezoid_1d(Scalar lo, Scalar hi, int points) {
    VectorT<Scalar> x = VectorT<Scalar>::LinSpaced(points, lo, hi);
    const Scalar h = (hi - lo) / static_cast<Scalar>(points - 1);
    VectorT<Scalar> w = VectorT<Scalar>::Constant(points, h);
    w(0) = h / 2;
    w(points - 1) = h / 2;
    return {x, w};
}

// Sums `count` per-block contributions produced by `block(i)` with a fixed
// pairwise tree. Blocks may be computed on up to `threads` workers (0 = auto);
// the result does not depend on the worker count.
Matrix blocked_pairwise_sum(Eigen::Index count, const std::function<Matrix(Eigen::Index)>& block,
                            unsigned threads = 0);

}  // namespace koopman
