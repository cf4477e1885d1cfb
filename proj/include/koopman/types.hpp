#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace koopman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Label : std::uint8_t { stable, unstable };

inline std::string_view to_string(Label l) { return l == Label::stable ? "stable" : "unstable"; }
Label label_from_string(std::string_view s);

// Axis-aligned box, one [lo_i, hi_i] interval per state dimension.
struct Box {
    Vector lo;
    Vector hi;

    [[nodiscard]] Eigen::Index dim() const { return lo.size(); }
    [[nodiscard]] bool contains(const Eigen::Ref<const Vector>& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }
    // Grows each side by `fraction` of the side length.
    [[nodiscard]] Box inflated(double fraction) const {
        const Vector pad = (hi - lo) * fraction;
        return {lo - pad, hi + pad};
    }
    [[nodiscard]] Box intersected(const Box& other) const {
        return {lo.cwiseMax(other.lo), hi.cwiseMin(other.hi)};
    }
    [[nodiscard]] double volume() const { return (hi - lo).prod(); }
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace koopman
