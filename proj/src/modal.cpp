#include "koopman/modal.hpp"

#include "koopman/csv.hpp"
#include "koopman/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>
#include <sstream>

namespace koopman {

std::string to_string(ModeClass c) {
    switch (c) {
        case ModeClass::unstable: return "unstable";
        case ModeClass::marginal: return "marginal";
        case ModeClass::stable: return "stable";
    }
    return "?";
}

ModeClass classify(std::complex<double> lambda, double epsilon) {
    const double r = std::abs(lambda);
    if (r > 1.0 + epsilon) return ModeClass::unstable;
    if (r < 1.0 - epsilon) return ModeClass::stable;
    return ModeClass::marginal;
}

std::vector<int> ModalDecomposition::indices(ModeClass c) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i] == c) out.push_back(static_cast<int>(i));
    return out;
}

ModalDecomposition eigendecompose(const Matrix& a, double epsilon, double reconstruction_tol) {
    if (a.rows() != a.cols()) throw ShapeError("eigendecomposition needs a square matrix");
    if (!a.allFinite()) throw PreconditionError("matrix is not finite");
    if (!(epsilon > 0)) throw PreconditionError("stability tolerance must be positive");
    const Eigen::Index d = a.rows();

    Eigen::EigenSolver<Matrix> solver(a, true);
    if (solver.info() != Eigen::Success) throw EigenError("eigen-solver did not converge");

    ModalDecomposition m;
    m.epsilon = epsilon;
    m.eigenvalues = solver.eigenvalues();
    const Eigen::MatrixXcd vecs = solver.eigenvectors();
    m.v.resize(d, d);
    m.d_real = Matrix::Zero(d, d);
    m.classes.resize(d);
    for (Eigen::Index i = 0; i < d;) {
        const std::complex<double> lambda = m.eigenvalues(i);
        const ModeClass cls = classify(lambda, epsilon);
        if (lambda.imag() == 0.0 || i + 1 == d) {
            Vector col = vecs.col(i).real();
            col /= col.norm();
            m.v.col(i) = col;
            m.d_real(i, i) = lambda.real();
            m.classes[i] = cls;
            m.blocks.push_back({i, 1, cls});
            i += 1;
            continue;
        }
        // A [vr vi] = [vr vi] [[a, b], [-b, a]] for lambda = a + ib.
        Vector vr = vecs.col(i).real();
        Vector vi = vecs.col(i).imag();
        const double scale = std::sqrt(vr.squaredNorm() + vi.squaredNorm());
        m.v.col(i) = vr / scale;
        m.v.col(i + 1) = vi / scale;
        m.d_real(i, i) = lambda.real();
        m.d_real(i, i + 1) = lambda.imag();
        m.d_real(i + 1, i) = -lambda.imag();
        m.d_real(i + 1, i + 1) = lambda.real();
        m.classes[i] = cls;
        m.classes[i + 1] = cls;
        m.blocks.push_back({i, 2, cls});
        i += 2;
    }

    Eigen::FullPivLU<Matrix> lu(m.v);
    if (!lu.isInvertible())
        throw DefectiveMatrixError("eigenvector basis is singular (A is defective); tighten svd_tol upstream");
    const Matrix v_inv = lu.inverse();
    m.w = v_inv.transpose();
    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
    m.reconstruction_residual = (m.v * m.d_real * v_inv - a).norm() / scale;
    if (!(m.reconstruction_residual <= reconstruction_tol)) {
        std::ostringstream msg;
        msg << "modal reconstruction residual " << m.reconstruction_residual
            << " exceeds tolerance; A is numerically defective, consider adjusting svd_tol upstream";
        throw DefectiveMatrixError(msg.str());
    }

    for (const auto& b : m.blocks)
        if (b.cls == ModeClass::unstable)
            for (int k = 0; k < b.size; ++k) m.unstable_columns.push_back(b.column + k);
    const auto k = static_cast<Eigen::Index>(m.unstable_columns.size());
    m.unstable_left.resize(d, k);
    for (Eigen::Index j = 0; j < k; ++j) m.unstable_left.col(j) = m.w.col(m.unstable_columns[j]);
    if (k > 0) {
        Eigen::HouseholderQR<Matrix> qr(m.unstable_left);
        m.unstable_orthonormal = qr.householderQ() * Matrix::Identity(d, k);
    } else {
        m.unstable_orthonormal.resize(d, 0);
    }
    return m;
}

Vector project_unstable(const ModalDecomposition& decomp, const Vector& z, LeftBasis basis) {
    const Matrix& wu = basis == LeftBasis::raw ? decomp.unstable_left : decomp.unstable_orthonormal;
    if (z.size() != wu.rows()) throw ShapeError("lifted vector does not match decomposition");
    return wu.transpose() * z;
}

std::optional<double> instability_quotient_lifted(const ModalDecomposition& decomp, const Vector& z) {
    const double norm = z.norm();
    if (!(norm >= 1e-300)) return std::nullopt;
    return project_unstable(decomp, z, LeftBasis::orthonormal).norm() / norm;
}

std::optional<double> instability_quotient(const ModalDecomposition& decomp, const ObservableDictionary& dict,
                                           const Vector& x) {
    return instability_quotient_lifted(decomp, eval_lift(dict, x));
}

std::vector<Label> truth_labels(const DynamicalSystem& system, const Matrix& nodes, int horizon) {
    std::vector<Label> out;
    out.reserve(nodes.rows());
    for (Eigen::Index r = 0; r < nodes.rows(); ++r)
        out.push_back(simulate(system, nodes.row(r).transpose(), horizon).label);
    return out;
}

namespace {

Matrix grid_nodes(const Box& box, int resolution) {
    const auto pts = uniform_grid(box, resolution);
    Matrix nodes(static_cast<Eigen::Index>(pts.size()), box.dim());
    for (std::size_t i = 0; i < pts.size(); ++i) nodes.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    return nodes;
}

}  // namespace

BoundaryField ground_truth_field(const DynamicalSystem& system, const Box& box, int resolution, int horizon) {
    BoundaryField f;
    f.box = box;
    f.resolution = resolution;
    f.nodes = grid_nodes(box, resolution);
    f.truth = truth_labels(system, f.nodes, horizon);
    f.xi.resize(f.nodes.rows());
    for (Eigen::Index r = 0; r < f.xi.size(); ++r) f.xi(r) = f.truth[r] == Label::unstable ? 1.0 : 0.0;
    f.summary = summarize(f.xi, f.truth);
    return f;
}

BoundaryField boundary_grid(const ModalDecomposition& decomp, const ObservableDictionary& dict, const Box& box,
                            int resolution, std::span<const Label> truth) {
    if (resolution < 2) throw PreconditionError("boundary grid needs at least 2 points per axis");
    BoundaryField f;
    f.box = box;
    f.resolution = resolution;
    f.nodes = grid_nodes(box, resolution);
    const Matrix z = dict.eval_batch(f.nodes);
    f.xi.resize(f.nodes.rows());
    for (Eigen::Index r = 0; r < f.nodes.rows(); ++r) {
        const Vector zr = z.row(r).transpose();
        const auto q = zr.allFinite() ? instability_quotient_lifted(decomp, zr) : std::nullopt;
        f.xi(r) = q.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (!truth.empty()) {
        if (static_cast<Eigen::Index>(truth.size()) != f.nodes.rows())
            throw ShapeError("truth labels do not match the grid");
        f.truth.assign(truth.begin(), truth.end());
        f.summary = summarize(f.xi, truth);
    }
    return f;
}

BoundaryField boundary_grid(const LiftedLinearModel& model, const Box& box, int resolution, double epsilon,
                            std::span<const Label> truth) {
    return boundary_grid(eigendecompose(model.a, epsilon), *model.dictionary, box, resolution, truth);
}

BoundarySummary summarize(const Vector& xi, std::span<const Label> truth, double threshold) {
    if (static_cast<Eigen::Index>(truth.size()) != xi.size()) throw ShapeError("truth labels do not match field");
    BoundarySummary s;
    s.threshold = threshold;
    double sum_s = 0, sum_u = 0;
    Eigen::Index n_s = 0, n_u = 0, correct = 0, defined = 0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        if (std::isnan(xi(i))) {
            ++s.undefined_nodes;
            continue;
        }
        ++defined;
        const bool unstable = truth[i] == Label::unstable;
        (unstable ? sum_u : sum_s) += xi(i);
        ++(unstable ? n_u : n_s);
        if ((xi(i) > threshold) == unstable) ++correct;
    }
    s.mean_xi_stable = n_s ? sum_s / static_cast<double>(n_s) : 0.0;
    s.mean_xi_unstable = n_u ? sum_u / static_cast<double>(n_u) : 0.0;
    s.contrast = s.mean_xi_unstable - s.mean_xi_stable;
    s.accuracy = defined ? static_cast<double>(correct) / static_cast<double>(defined) : 0.0;
    return s;
}

void write_boundary_csv(std::ostream& os, const BoundaryField& field) {
    for (Eigen::Index i = 0; i < field.nodes.cols(); ++i) os << 'x' << i << ',';
    os << "xi,truth_label\n";
    for (Eigen::Index r = 0; r < field.nodes.rows(); ++r) {
        csv::write_row(os, field.nodes.row(r).transpose());
        os << ',' << csv::format(field.xi(r)) << ',';
        os << (field.truth.empty() ? "" : std::string(to_string(field.truth[r]))) << '\n';
    }
}

void write_eigenvalues_csv(std::ostream& os, const ModalDecomposition& decomp) {
    os << "re,im,abs,class\n";
    for (Eigen::Index i = 0; i < decomp.eigenvalues.size(); ++i) {
        const auto l = decomp.eigenvalues(i);
        os << csv::format(l.real()) << ',' << csv::format(l.imag()) << ',' << csv::format(std::abs(l)) << ','
           << to_string(decomp.classes[i]) << '\n';
    }
}

}  // namespace koopman
