#include "koopman/dynamics.hpp"

#include "koopman/csv.hpp"
#include "koopman/rng.hpp"

#include <algorithm>
#include <limits>
#include <istream>
#include <map>
#include <ostream>

namespace koopman {

Label label_from_string(std::string_view s) {
    if (s == "stable") return Label::stable;
    if (s == "unstable") return Label::unstable;
    throw IoError("unknown label '" + std::string(s) + "'");
}

DynamicalSystem DynamicalSystem::continuous(std::string name, int n, StateMap field, double dt) {
    if (n < 1) throw PreconditionError("system dimension must be >= 1");
    if (!(dt > 0)) throw PreconditionError("dt must be positive");
    DynamicalSystem s;
    s.name = std::move(name);
    s.dimension = n;
    s.vector_field = std::move(field);
    s.dt = dt;
    return s;
}

DynamicalSystem DynamicalSystem::discrete(std::string name, int n, StateMap map) {
    if (n < 1) throw PreconditionError("system dimension must be >= 1");
    DynamicalSystem s;
    s.name = std::move(name);
    s.dimension = n;
    s.discrete_map = std::move(map);
    return s;
}

DynamicalSystem benchmark_system(double dt) {
    return DynamicalSystem::continuous(
        "benchmark", 2,
        [](const Vector& s) {
            const double x = s(0), y = s(1);
            Vector d(2);
            d << -x + x * x + y * y, -y + y * y + x * x - x;
            return d;
        },
        dt);
}

DynamicalSystem exponential_decay_system(double dt) {
    return DynamicalSystem::continuous("decay", 1, [](const Vector& s) -> Vector { return -s; }, dt);
}

DynamicalSystem linear_discrete_system(const Matrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("linear system matrix must be square");
    return DynamicalSystem::discrete("linear", static_cast<int>(m.rows()),
                                     [m](const Vector& s) -> Vector { return m * s; });
}

namespace {

void require_finite(const Vector& v, const Vector& from) {
    if (!v.allFinite()) throw DivergenceError("non-finite value while stepping the system", from);
}

}  // namespace

Vector step(const DynamicalSystem& system, const Vector& x) {
    if (x.size() != system.dimension) throw ShapeError("state length does not match system dimension");
    if (!system.is_continuous()) {
        Vector next = system.discrete_map(x);
        require_finite(next, x);
        return next;
    }
    const auto checked_field = [&](const Vector& s) {
        Vector d = system.vector_field(s);
        require_finite(d, x);
        return d;
    };
    Vector next = rk4_step(checked_field, x, *system.dt);
    require_finite(next, x);
    return next;
}

Trajectory simulate(const DynamicalSystem& system, const Vector& x0, int horizon, double divergence_bound) {
    if (horizon < 1) throw PreconditionError("horizon must be >= 1");
    if (!x0.allFinite()) throw PreconditionError("initial condition must be finite");
    Trajectory t;
    t.dt = system.dt.value_or(1.0);
    t.states.reserve(static_cast<std::size_t>(horizon) + 1);
    t.states.push_back(x0);
    if (x0.norm() > divergence_bound) {
        t.diverged = true;
    }
    for (int k = 0; k < horizon && !t.diverged; ++k) {
        try {
            Vector next = step(system, t.states.back());
            if (next.norm() > divergence_bound) {
                t.diverged = true;
                break;
            }
            t.states.push_back(std::move(next));
        } catch (const DivergenceError&) {
            t.diverged = true;
        }
    }
    t.label = t.diverged ? Label::unstable : Label::stable;
    return t;
}

Eigen::Index SnapshotDataset::count(Label l) const {
    return std::count(labels.begin(), labels.end(), l);
}

SnapshotDataset SnapshotDataset::partition(Label l) const {
    SnapshotDataset out;
    const Eigen::Index rows = count(l);
    out.xk.resize(rows, xk.cols());
    out.xkp1.resize(rows, xkp1.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < size(); ++i) {
        if (labels[i] != l) continue;
        out.xk.row(r) = xk.row(i);
        out.xkp1.row(r) = xkp1.row(i);
        out.labels.push_back(l);
        out.traj_ids.push_back(traj_ids.empty() ? -1 : traj_ids[i]);
        out.steps.push_back(steps.empty() ? -1 : steps[i]);
        ++r;
    }
    out.bounding_box = bounding_box;
    return out;
}

DatasetResult build_dataset(const DynamicalSystem& system, const std::vector<Vector>& initial_conditions,
                            int horizon, double divergence_bound) {
    if (initial_conditions.empty()) throw PreconditionError("no initial conditions");
    DatasetResult result;
    result.trajectories.reserve(initial_conditions.size());
    Eigen::Index pairs = 0;
    for (const auto& x0 : initial_conditions) {
        result.trajectories.push_back(simulate(system, x0, horizon, divergence_bound));
        pairs += result.trajectories.back().steps();
    }
    if (pairs == 0) throw EmptyDatasetError("no finite snapshot pairs survived divergence filtering");

    const int n = system.dimension;
    auto& d = result.dataset;
    d.xk.resize(pairs, n);
    d.xkp1.resize(pairs, n);
    d.labels.reserve(pairs);
    Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    Eigen::Index r = 0;
    for (std::size_t id = 0; id < result.trajectories.size(); ++id) {
        const auto& t = result.trajectories[id];
        for (const auto& s : t.states) {
            lo = lo.cwiseMin(s);
            hi = hi.cwiseMax(s);
        }
        for (int k = 0; k < t.steps(); ++k, ++r) {
            d.xk.row(r) = t.states[k].transpose();
            d.xkp1.row(r) = t.states[k + 1].transpose();
            d.labels.push_back(t.label);
            d.traj_ids.push_back(static_cast<int>(id));
            d.steps.push_back(k);
        }
    }
    d.bounding_box = {lo, hi};
    return result;
}

std::vector<Vector> uniform_grid(const Box& box, int points_per_axis) {
    if (points_per_axis < 2) throw PreconditionError("grid needs at least 2 points per axis");
    const Eigen::Index n = box.dim();
    Eigen::Index total = 1;
    for (Eigen::Index i = 0; i < n; ++i) total *= points_per_axis;
    std::vector<Vector> out;
    out.reserve(total);
    std::vector<int> idx(n, 0);
    for (Eigen::Index k = 0; k < total; ++k) {
        Vector p(n);
        for (Eigen::Index i = 0; i < n; ++i)
            p(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * idx[i] / (points_per_axis - 1);
        out.push_back(std::move(p));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (++idx[i] < points_per_axis) break;
            idx[i] = 0;
        }
    }
    return out;
}

std::vector<Vector> uniform_random(const Box& box, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Vector p(box.dim());
        for (Eigen::Index i = 0; i < box.dim(); ++i) p(i) = rng.uniform(box.lo(i), box.hi(i));
        out.push_back(std::move(p));
    }
    return out;
}

void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories) {
    const Eigen::Index n = trajectories.empty() ? 0 : trajectories.front().states.front().size();
    os << "traj_id,step,label";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
    os << '\n';
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const auto& t = trajectories[id];
        for (std::size_t k = 0; k < t.states.size(); ++k) {
            os << id << ',' << k << ',' << to_string(t.label) << ',';
            csv::write_row(os, t.states[k]);
            os << '\n';
        }
    }
}

std::vector<Trajectory> read_trajectories_csv(std::istream& is, double dt) {
    std::string line;
    if (!csv::next_record(is, line)) throw IoError("trajectory csv: missing header");
    const auto header = csv::split(line);
    if (header.size() < 4 || header[0] != "traj_id") throw IoError("trajectory csv: bad header");
    const std::size_t n = header.size() - 3;
    std::map<int, Trajectory> by_id;
    while (csv::next_record(is, line)) {
        const auto f = csv::split(line);
        if (f.size() != n + 3) throw IoError("trajectory csv: ragged row");
        auto& t = by_id[std::stoi(f[0])];
        t.dt = dt;
        t.label = label_from_string(f[2]);
        Vector s(n);
        for (std::size_t i = 0; i < n; ++i) s(i) = csv::parse_double(f[3 + i]);
        t.states.push_back(std::move(s));
    }
    std::vector<Trajectory> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) {
        t.diverged = t.label == Label::unstable;
        out.push_back(std::move(t));
    }
    return out;
}

void write_pairs_csv(std::ostream& os, const SnapshotDataset& data) {
    const int n = data.dimension();
    os << "label";
    for (int i = 0; i < n; ++i) os << ",xk_" << i;
    for (int i = 0; i < n; ++i) os << ",xkp1_" << i;
    os << '\n';
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        os << to_string(data.labels[r]) << ',';
        csv::write_row(os, data.xk.row(r).transpose());
        os << ',';
        csv::write_row(os, data.xkp1.row(r).transpose());
        os << '\n';
    }
}

SnapshotDataset read_pairs_csv(std::istream& is) {
    std::string line;
    if (!csv::next_record(is, line)) throw IoError("pairs csv: missing header");
    const auto header = csv::split(line);
    if (header.size() < 3 || header[0] != "label" || (header.size() - 1) % 2 != 0)
        throw IoError("pairs csv: bad header");
    const std::size_t n = (header.size() - 1) / 2;
    std::vector<Label> labels;
    std::vector<double> values;
    while (csv::next_record(is, line)) {
        const auto f = csv::split(line);
        if (f.size() != 2 * n + 1) throw IoError("pairs csv: ragged row");
        labels.push_back(label_from_string(f[0]));
        for (std::size_t i = 1; i < f.size(); ++i) values.push_back(csv::parse_double(f[i]));
    }
    SnapshotDataset d;
    const auto rows = static_cast<Eigen::Index>(labels.size());
    d.xk.resize(rows, n);
    d.xkp1.resize(rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            d.xk(r, i) = values[r * 2 * n + i];
            d.xkp1(r, i) = values[r * 2 * n + n + i];
        }
    }
    d.labels = std::move(labels);
    if (rows > 0) {
        Matrix all(2 * rows, n);
        all << d.xk, d.xkp1;
        d.bounding_box = {all.colwise().minCoeff().transpose(), all.colwise().maxCoeff().transpose()};
    }
    return d;
}

}  // namespace koopman
