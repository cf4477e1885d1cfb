#include "koopman/eval.hpp"

#include "koopman/csv.hpp"
#include "koopman/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

namespace koopman {

Rollout rollout(const LiftedLinearModel& model, const Vector& x0, int horizon) {
    if (horizon < 1) throw PreconditionError("rollout horizon must be >= 1");
    const int n = model.state_dim();
    Rollout r;
    r.predicted.reserve(static_cast<std::size_t>(horizon) + 1);
    r.predicted.push_back(x0);
    Vector z = eval_lift(*model.dictionary, x0);
    const Vector nan = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (int k = 1; k <= horizon; ++k) {
        if (r.diverged) {
            r.predicted.push_back(nan);
            continue;
        }
        z = model.a * z;
        if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kRolloutOverflow) {
            r.diverged = true;
            r.divergence_step = k;
            r.predicted.push_back(nan);
            continue;
        }
        r.predicted.push_back(z.head(n));
    }
    return r;
}

double sse(const Rollout& pred, const Trajectory& truth, int step) {
    if (step < 0 || step > pred.horizon()) throw PreconditionError("step outside the rollout");
    if (pred.diverged && step >= pred.divergence_step) return kDivergenceSentinel;
    if (step > truth.steps()) {
        if (truth.diverged) return kDivergenceSentinel;
        throw PreconditionError("step outside the ground-truth trajectory");
    }
    const double e = (truth.states[step] - pred.predicted[step]).squaredNorm();
    return std::isfinite(e) && e < kDivergenceSentinel ? e : kDivergenceSentinel;
}

const ErrorEntry& ErrorTable::at(const std::string& model, Label subspace, int horizon) const {
    for (const auto& e : entries)
        if (e.model == model && e.subspace == subspace && e.horizon == horizon) return e;
    throw PreconditionError("no table entry for " + model);
}

ErrorEntry aggregate_sse(const std::vector<double>& values) {
    if (values.empty()) throw EmptyDatasetError("no trajectories to aggregate");
    ErrorEntry e;
    e.min_sse = *std::min_element(values.begin(), values.end());
    e.max_sse = *std::max_element(values.begin(), values.end());
    e.saturated = e.max_sse >= kDivergenceSentinel;
    if (e.saturated) {
        e.mean_sse = kDivergenceSentinel;
    } else {
        double sum = 0.0;
        for (const double v : values) sum += v;
        e.mean_sse = sum / static_cast<double>(values.size());
    }
    return e;
}

ErrorTable evaluate_suite(const std::vector<NamedModel>& models, const std::vector<Trajectory>& test,
                          const std::vector<int>& horizons) {
    if (horizons.empty()) throw PreconditionError("no evaluation horizons");
    const int max_h = *std::max_element(horizons.begin(), horizons.end());
    ErrorTable table;
    for (const auto& nm : models) {
        for (const Label subspace : {Label::stable, Label::unstable}) {
            // sse_by_step[k][t]
            std::vector<std::vector<double>> by_step(static_cast<std::size_t>(max_h) + 1);
            for (const auto& t : test) {
                if (t.label != subspace) continue;
                const Rollout r = rollout(nm.model, t.states.front(), max_h);
                for (int k = 0; k <= max_h; ++k) by_step[k].push_back(sse(r, t, k));
            }
            if (by_step.front().empty())
                throw EmptyDatasetError("no " + std::string(to_string(subspace)) + " test trajectories");
            for (int k = 0; k <= max_h; ++k) {
                ErrorEntry e = aggregate_sse(by_step[k]);
                e.model = nm.name;
                e.subspace = subspace;
                e.order = nm.model.lifted_dim();
                e.horizon = k;
                table.series.push_back(e);
                if (std::find(horizons.begin(), horizons.end(), k) != horizons.end()) table.entries.push_back(e);
            }
        }
    }
    return table;
}

void assert_disjoint_seeds(const std::vector<Vector>& train, const std::vector<Vector>& test) {
    std::set<std::vector<double>> seen;
    for (const auto& x : train) seen.emplace(x.data(), x.data() + x.size());
    for (const auto& x : test)
        if (seen.count(std::vector<double>(x.data(), x.data() + x.size())))
            throw PreconditionError("a test initial condition also appears in the training set");
}

namespace {

void write_entries(std::ostream& os, const std::vector<ErrorEntry>& entries, const char* step_name) {
    os << "model,subspace,order," << step_name << ",mean_sse,min_sse,max_sse\n";
    for (const auto& e : entries) {
        os << e.model << ',' << to_string(e.subspace) << ',' << e.order << ',' << e.horizon << ','
           << csv::format(e.mean_sse) << ',' << csv::format(e.min_sse) << ',' << csv::format(e.max_sse) << '\n';
    }
}

}  // namespace

void write_error_table_csv(std::ostream& os, const ErrorTable& table) { write_entries(os, table.entries, "horizon"); }

void write_series_csv(std::ostream& os, const ErrorTable& table) { write_entries(os, table.series, "step"); }

}  // namespace koopman
