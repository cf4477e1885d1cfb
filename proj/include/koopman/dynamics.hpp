#pragma once

#include "koopman/error.hpp"
#include "koopman/types.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace koopman {

inline constexpr double kDefaultDt = 0.1;
inline constexpr double kDivergenceBound = 1e3;

// Raised when an integrator step produces non-finite values.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, Vector state) : Error(what), state_(std::move(state)) {}
    [[nodiscard]] const char* kind() const noexcept override { return "divergence"; }
    [[nodiscard]] const Vector& state() const { return state_; }

private:
    Vector state_;
};

using StateMap = std::function<Vector(const Vector&)>;

// A nonlinear map f, either native discrete or induced by one RK4 step of a
// continuous vector field.
struct DynamicalSystem {
    std::string name;
    int dimension = 0;
    StateMap vector_field;   // continuous systems
    StateMap discrete_map;   // discrete systems
    std::optional<double> dt;

    [[nodiscard]] bool is_continuous() const { return static_cast<bool>(vector_field); }

    static DynamicalSystem continuous(std::string name, int n, StateMap field, double dt);
    static DynamicalSystem discrete(std::string name, int n, StateMap map);
};

// The two-state benchmark with a stable basin around the origin and a saddle
// at (1, 0):  x' = -x + x^2 + y^2,  y' = -y + y^2 + x^2 - x.
DynamicalSystem benchmark_system(double dt = kDefaultDt);

// x' = -x, used for integrator order checks.
DynamicalSystem exponential_decay_system(double dt);

// x_{k+1} = M x_k.
DynamicalSystem linear_discrete_system(const Matrix& m);

// Classical fourth-order Runge-Kutta step.
template <typename Field, typename Scalar>
VectorT<Scalar> rk4_step(const Field& field, const VectorT<Scalar>& x, Scalar dt) {
    const VectorT<Scalar> k1 = field(x);
    const VectorT<Scalar> k2 = field(VectorT<Scalar>(x + (dt / 2) * k1));
    const VectorT<Scalar> k3 = field(VectorT<Scalar>(x + (dt / 2) * k2));
    const VectorT<Scalar> k4 = field(VectorT<Scalar>(x + dt * k3));
    return x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Applies f once. Throws DivergenceError on non-finite output.
Vector step(const DynamicalSystem& system, const Vector& x);

struct Trajectory {
    std::vector<Vector> states;
    double dt = 0.0;
    bool diverged = false;
    Label label = Label::stable;

    [[nodiscard]] int steps() const { return static_cast<int>(states.size()) - 1; }
};

// Iterates f up to `horizon` times. Stops when the state norm would exceed
// `divergence_bound` (the offending state is not stored) and labels the
// trajectory unstable in that case.
Trajectory simulate(const DynamicalSystem& system, const Vector& x0, int horizon,
                    double divergence_bound = kDivergenceBound);

struct SnapshotDataset {
    Matrix xk;    // rows are samples
    Matrix xkp1;  // row i = f(row i of xk)
    std::vector<Label> labels;
    std::vector<int> traj_ids;
    std::vector<int> steps;
    Box bounding_box;  // over every finite state seen while building

    [[nodiscard]] Eigen::Index size() const { return xk.rows(); }
    [[nodiscard]] int dimension() const { return static_cast<int>(xk.cols()); }
    [[nodiscard]] Eigen::Index count(Label l) const;
    [[nodiscard]] SnapshotDataset partition(Label l) const;
};

struct DatasetResult {
    SnapshotDataset dataset;
    std::vector<Trajectory> trajectories;
};

// Simulates every initial condition and emits all consecutive pairs, ordered
// by seed index then step. Throws EmptyDatasetError when no pair survives.
DatasetResult build_dataset(const DynamicalSystem& system, const std::vector<Vector>& initial_conditions,
                            int horizon, double divergence_bound = kDivergenceBound);

// Seed generators over a box.
std::vector<Vector> uniform_grid(const Box& box, int points_per_axis);
std::vector<Vector> uniform_random(const Box& box, int count, std::uint64_t seed);

// CSV: `traj_id,step,label,x0..x{n-1}`.
void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories_csv(std::istream& is, double dt);
// CSV: `label,xk_0..xk_{n-1},xkp1_0..xkp1_{n-1}`.
void write_pairs_csv(std::ostream& os, const SnapshotDataset& data);
SnapshotDataset read_pairs_csv(std::istream& is);

}  // namespace koopman
