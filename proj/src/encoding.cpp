#include "koopman/encoding.hpp"

#include "koopman/error.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>

namespace koopman {

namespace {

constexpr Eigen::Index kBlockSize = 512;

Eigen::Index block_count(Eigen::Index nodes) { return (nodes + kBlockSize - 1) / kBlockSize; }

void check_lift_finite(const Matrix& z, const Matrix& nodes, Eigen::Index offset) {
    if (z.allFinite()) return;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        for (Eigen::Index i = 0; i < z.cols(); ++i) {
            if (std::isfinite(z(r, i))) continue;
            std::ostringstream msg;
            msg << "non-finite integrand for (i, j) = (" << i << ", " << i << ") at x = ("
                << nodes.row(offset + r) << ")";
            throw EvaluationError(msg.str());
        }
    }
}

// Lifts nodes [begin, begin+len) and f of them; rows whose image is not finite
// get zero weight and are reported.
struct BlockLift {
    Matrix z;
    Matrix zf;
    Vector w;
    std::vector<Eigen::Index> rejected;
};

BlockLift lift_block(const ObservableDictionary& dict, const DynamicalSystem* system, const QuadratureRule& rule,
                     Eigen::Index begin, Eigen::Index len) {
    BlockLift b;
    const Matrix nodes = rule.nodes.middleRows(begin, len);
    b.z = dict.eval_batch(nodes);
    check_lift_finite(b.z, rule.nodes, begin);
    b.w = rule.weights.segment(begin, len);
    if (!system) return b;
    Matrix images(len, nodes.cols());
    std::vector<bool> ok(len, true);
    for (Eigen::Index r = 0; r < len; ++r) {
        try {
            images.row(r) = step(*system, nodes.row(r).transpose()).transpose();
        } catch (const DivergenceError&) {
            ok[r] = false;
            images.row(r).setZero();
        }
    }
    b.zf = dict.eval_batch(images);
    for (Eigen::Index r = 0; r < len; ++r) {
        if (!ok[r] || !b.zf.row(r).allFinite()) {
            b.rejected.push_back(begin + r);
            b.w(r) = 0.0;
            b.zf.row(r).setZero();
            b.z.row(r).setZero();
        }
    }
    return b;
}

}  // namespace

PseudoInverse truncated_pinv(const Matrix& m, double tol) {
    if (!(tol > 0 && tol < 1)) throw PreconditionError("svd tolerance must lie in (0, 1)");
    if (!m.allFinite()) throw EvaluationError("cannot invert a non-finite matrix");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    PseudoInverse p;
    p.sigma_max = s.size() ? s(0) : 0.0;
    if (!(p.sigma_max > 0)) throw DegenerateDictionaryError("all singular values vanish");
    const double cut = tol * p.sigma_max;
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut)
            inv(i) = 1.0 / s(i);
        else
            ++p.truncated;
    }
    p.condition = s(s.size() - 1) > 0 ? p.sigma_max / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    p.matrix = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    return p;
}

Matrix compute_R(const ObservableDictionary& dict, const IntegrationDomain& domain, unsigned threads) {
    const QuadratureRule rule = make_rule(domain);
    const Eigen::Index nodes = rule.nodes.rows();
    Matrix r = blocked_pairwise_sum(
        block_count(nodes),
        [&](Eigen::Index b) {
            const Eigen::Index begin = b * kBlockSize;
            const BlockLift l = lift_block(dict, nullptr, rule, begin, std::min(kBlockSize, nodes - begin));
            const Matrix sz = l.w.cwiseSqrt().asDiagonal() * l.z;
            return Matrix(sz.transpose() * sz);
        },
        threads);
    return 0.5 * (r + r.transpose());
}

EncodingMatrices encoding_matrices(const ObservableDictionary& dict, const DynamicalSystem& system,
                                   const IntegrationDomain& domain, unsigned threads) {
    if (system.dimension != dict.state_dim()) throw ShapeError("system and dictionary disagree on dimension");
    const QuadratureRule rule = make_rule(domain);
    const Eigen::Index nodes = rule.nodes.rows();
    const Eigen::Index d = dict.lifted_dim();
    std::mutex rejected_mutex;
    std::vector<Eigen::Index> rejected;
    // Q and R are stacked as [Q; R] so one pairwise reduction covers both.
    const Matrix qr = blocked_pairwise_sum(
        block_count(nodes),
        [&](Eigen::Index b) {
            const Eigen::Index begin = b * kBlockSize;
            const BlockLift l = lift_block(dict, &system, rule, begin, std::min(kBlockSize, nodes - begin));
            if (!l.rejected.empty()) {
                std::lock_guard lock(rejected_mutex);
                rejected.insert(rejected.end(), l.rejected.begin(), l.rejected.end());
            }
            Matrix out(2 * d, d);
            // sqrt-weighted factors keep Q and R on one code path, so f = identity gives Q == R.
            const Vector sw = l.w.cwiseSqrt();
            const Matrix sz = sw.asDiagonal() * l.z;
            out.topRows(d) = (sw.asDiagonal() * l.zf).transpose() * sz;
            out.bottomRows(d) = sz.transpose() * sz;
            return out;
        },
        threads);
    std::sort(rejected.begin(), rejected.end());
    EncodingMatrices e;
    e.nodes = nodes;
    e.rejected = static_cast<Eigen::Index>(rejected.size());
    for (const auto idx : rejected) e.rejected_nodes.push_back(rule.nodes.row(idx).transpose());
    if (static_cast<double>(e.rejected) > kMaxRejectedFraction * static_cast<double>(nodes)) {
        std::ostringstream msg;
        msg << e.rejected << " of " << nodes << " quadrature nodes leave the finite region of f";
        throw DomainError(msg.str());
    }
    e.q = qr.topRows(d);
    const Matrix r = qr.bottomRows(d);
    e.r = 0.5 * (r + r.transpose());
    return e;
}

Matrix compute_Q(const ObservableDictionary& dict, const DynamicalSystem& system,
                 const IntegrationDomain& domain, unsigned threads) {
    return encoding_matrices(dict, system, domain, threads).q;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::direct_encoding: return "direct-encoding";
        case Provenance::edmd: return "edmd";
        case Provenance::learned_linear_layer: return "learned-linear-layer";
    }
    return "?";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "direct-encoding") return Provenance::direct_encoding;
    if (s == "edmd") return Provenance::edmd;
    if (s == "learned-linear-layer") return Provenance::learned_linear_layer;
    throw ConfigError("unknown provenance '" + s + "'");
}

LiftedLinearModel direct_encode(DictionaryPtr dict, const DynamicalSystem& system,
                                const IntegrationDomain& domain, double svd_tol, unsigned threads) {
    const EncodingMatrices e = encoding_matrices(*dict, system, domain, threads);
    const PseudoInverse p = truncated_pinv(e.r, svd_tol);
    if (p.truncated == e.r.rows()) throw DegenerateDictionaryError("every singular value of R was truncated");
    LiftedLinearModel model;
    model.dictionary = std::move(dict);
    model.a = e.q * p.matrix;
    model.provenance = Provenance::direct_encoding;
    model.diagnostics = {{"domain", domain.to_json()},
                         {"quadrature", to_string(domain.scheme)},
                         {"svd_tol", svd_tol},
                         {"truncated_singular_values", p.truncated},
                         {"r_condition", std::isfinite(p.condition) ? nlohmann::json(p.condition) : nlohmann::json("inf")},
                         {"nodes", e.nodes},
                         {"rejected_nodes", e.rejected}};
    if (!model.a.allFinite()) throw EvaluationError("direct encoding produced a non-finite matrix");
    return model;
}

LiftedLinearModel edmd_fit(DictionaryPtr dict, const SnapshotDataset& data, double svd_tol) {
    if (data.size() == 0) throw EmptyDatasetError("edmd needs at least one snapshot pair");
    const Matrix zk = dict->eval_batch(data.xk);
    const Matrix zp = dict->eval_batch(data.xkp1);
    if (!zk.allFinite() || !zp.allFinite()) throw EvaluationError("lifted snapshots are not finite");
    const double inv_n = 1.0 / static_cast<double>(data.size());
    const Matrix gram = inv_n * (zk.transpose() * zk);
    const Matrix cross = inv_n * (zp.transpose() * zk);
    const PseudoInverse p = truncated_pinv(gram, svd_tol);
    const bool underdetermined = data.size() < dict->lifted_dim();
    if (underdetermined)
        std::cerr << "warning: edmd with " << data.size() << " samples for lifted dimension "
                  << dict->lifted_dim() << " is underdetermined\n";
    LiftedLinearModel model;
    model.dictionary = std::move(dict);
    model.a = cross * p.matrix;
    model.provenance = Provenance::edmd;
    model.diagnostics = {{"samples", data.size()},
                         {"svd_tol", svd_tol},
                         {"truncated_singular_values", p.truncated},
                         {"underdetermined", underdetermined}};
    return model;
}

LiftedLinearModel relift_linear_layer(DictionaryPtr ssog, const DynamicalSystem& system,
                                      const IntegrationDomain& domain, double svd_tol, unsigned threads) {
    return direct_encode(std::move(ssog), system, domain, svd_tol, threads);
}

IntegrationDomain resolve_domain(const Box& box, const DynamicalSystem& system, int resolution, int samples,
                                 std::uint64_t seed) {
    Box current = box;
    for (int round = 0; round < 40; ++round) {
        IntegrationDomain d = IntegrationDomain::for_box(current, resolution, samples, seed);
        const QuadratureRule rule = make_rule(d);
        Eigen::Index bad = 0;
        for (Eigen::Index r = 0; r < rule.nodes.rows(); ++r) {
            try {
                step(system, rule.nodes.row(r).transpose());
            } catch (const DivergenceError&) {
                ++bad;
            }
        }
        if (static_cast<double>(bad) <= kMaxRejectedFraction * static_cast<double>(rule.nodes.rows())) return d;
        const Vector center = 0.5 * (current.lo + current.hi);
        current = {center + 0.95 * (current.lo - center), center + 0.95 * (current.hi - center)};
    }
    throw DomainError("could not find a domain where f stays finite");
}

namespace {

nlohmann::json rows_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Vector row = m.row(r).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    return rows;
}

}  // namespace

nlohmann::json model_to_json(const LiftedLinearModel& model) {
    return {{"dictionary", model.dictionary->describe()},
            {"A", rows_json(model.a)},
            {"order", model.lifted_dim()},
            {"provenance", to_string(model.provenance)},
            {"diagnostics", model.diagnostics}};
}

LiftedLinearModel model_from_json(const nlohmann::json& j, const CheckpointResolver& load_checkpoint) {
    LiftedLinearModel model;
    model.dictionary = dictionary_from_json(j.at("dictionary"), load_checkpoint);
    const auto& rows = j.at("A");
    const auto d = static_cast<Eigen::Index>(rows.size());
    model.a.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != d) throw IoError("model bundle: A is not square");
        for (Eigen::Index c = 0; c < d; ++c) model.a(r, c) = row[c];
    }
    if (d != model.dictionary->lifted_dim()) throw IoError("model bundle: A does not match dictionary");
    model.provenance = provenance_from_string(j.at("provenance"));
    model.diagnostics = j.value("diagnostics", nlohmann::json::object());
    return model;
}

}  // namespace koopman
