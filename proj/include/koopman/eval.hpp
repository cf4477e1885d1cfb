#pragma once

#include "koopman/dynamics.hpp"
#include "koopman/encoding.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace koopman {

// Saturated SSE reported for any diverged comparison.
inline constexpr double kDivergenceSentinel = 6.8e131;
inline constexpr double kRolloutOverflow = 1e60;

struct Rollout {
    std::vector<Vector> predicted;  // horizon + 1 states; NaN after divergence
    bool diverged = false;
    int divergence_step = -1;

    [[nodiscard]] int horizon() const { return static_cast<int>(predicted.size()) - 1; }
};

// Lifts x0 once, then iterates z <- A z and reads back the state prefix.
Rollout rollout(const LiftedLinearModel& model, const Vector& x0, int horizon);

// Squared state error at `step`. Returns the sentinel when the prediction or
// the ground truth has diverged by that step.
double sse(const Rollout& pred, const Trajectory& truth, int step);

struct NamedModel {
    std::string name;
    LiftedLinearModel model;
};

struct ErrorEntry {
    std::string model;
    Label subspace = Label::stable;
    int order = 0;
    int horizon = 0;
    double mean_sse = 0.0;
    double min_sse = 0.0;
    double max_sse = 0.0;
    bool saturated = false;
};

struct ErrorTable {
    std::vector<ErrorEntry> entries;  // model x subspace x horizon
    std::vector<ErrorEntry> series;   // model x subspace x step (0..max horizon)

    [[nodiscard]] const ErrorEntry& at(const std::string& model, Label subspace, int horizon) const;
};

// Mean/min/max of per-trajectory SSE values. The mean saturates at the
// sentinel as soon as one member is diverged.
ErrorEntry aggregate_sse(const std::vector<double>& values);

ErrorTable evaluate_suite(const std::vector<NamedModel>& models, const std::vector<Trajectory>& test,
                          const std::vector<int>& horizons = {1, 10});

// Throws PreconditionError if any test initial condition equals a training one.
void assert_disjoint_seeds(const std::vector<Vector>& train, const std::vector<Vector>& test);

// `model,subspace,order,horizon,mean_sse,min_sse,max_sse`
void write_error_table_csv(std::ostream& os, const ErrorTable& table);
// `model,subspace,order,step,mean_sse,min_sse,max_sse`
void write_series_csv(std::ostream& os, const ErrorTable& table);

}  // namespace koopman
