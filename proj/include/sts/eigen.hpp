#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/SparseLU>

#include "sts/forms.hpp"
#include "sts/operator_block.hpp"

namespace sts {

/// Right/left eigenpairs of one block.  Left vectors are rows of the inverse of the
/// right-vector matrix, so left(n) . right(m) = delta_nm; in form language they are
/// degree D-k forms through the pairing integral(bra ^ ket).
struct EigenSystem {
    int degree = 0;
    std::optional<BasisLayout> layout;
    DenseVector values;
    DenseMatrix right;  ///< columns, unit 2-norm, largest entry real positive
    DenseMatrix left;   ///< rows
    double biorthogonality_residual = 0.0;
    double condition = 1.0;
    bool near_defective = false;

    Eigen::Index size() const { return values.size(); }
    bool has_vectors() const { return right.cols() == values.size() && values.size() > 0; }

    FormVector right_form(Eigen::Index n) const
    {
        require(layout.has_value() && has_vectors(), ErrorKind::domain, "eigensystem has no form vectors");
        return FormVector(*layout, degree, right.col(n));
    }
    /// The bra of eigenpair n as a degree D-k form.
    FormVector left_form(Eigen::Index n) const
    {
        require(layout.has_value() && has_vectors(), ErrorKind::domain, "eigensystem has no form vectors");
        return form_from_dual_row(*layout, degree, left.row(n));
    }
};

struct EigenOptions {
    bool vectors = true;
    /// Use the real cos/sin basis and a real eigensolver when the block is a real operator.
    bool real_basis = true;
    double defect_condition = 1e10;
};

namespace detail {

/// Lexicographic (Re, Im) order.
inline std::vector<Eigen::Index> sort_order(const DenseVector& w)
{
    std::vector<Eigen::Index> p(static_cast<std::size_t>(w.size()));
    std::iota(p.begin(), p.end(), 0);
    std::stable_sort(p.begin(), p.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (w[a].real() != w[b].real()) return w[a].real() < w[b].real();
        return w[a].imag() < w[b].imag();
    });
    return p;
}

inline void check_finite(const SparseMatrix& m)
{
    for (Eigen::Index j = 0; j < m.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(m, j); it; ++it)
            require(std::isfinite(it.value().real()) && std::isfinite(it.value().imag()), ErrorKind::numerical,
                    "non-finite matrix entry");
}

/// Unitary U taking complex Fourier coefficients to real cos/sin coordinates, per multi-index
/// channel: a = (x_c + x_-c)/sqrt2, b = -i (x_c - x_-c)/sqrt2, and x_0 unchanged.
inline SparseMatrix real_basis(const BasisLayout& l, int k)
{
    const std::size_t n = l.size(k), cells = l.cells();
    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::Triplet<cd>> t;
    for (std::size_t m = 0; m < l.multi_indices(k).size(); ++m)
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t nc = l.negated_cell(c);
            const auto i = static_cast<Eigen::Index>(l.index(m, c));
            const auto j = static_cast<Eigen::Index>(l.index(m, nc));
            if (c == nc) {
                t.emplace_back(i, i, 1.0);
            } else if (c < nc) {
                t.emplace_back(i, i, r);
                t.emplace_back(i, j, r);
                t.emplace_back(j, i, cd(0.0, -r));
                t.emplace_back(j, j, cd(0.0, r));
            }
        }
    SparseMatrix U(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    U.setFromTriplets(t.begin(), t.end());
    return U;
}

struct RawEigen {
    DenseVector values;
    DenseMatrix vectors;
};

inline RawEigen zgeev(DenseMatrix a, bool vectors)
{
    const auto n = static_cast<lapack_int>(a.rows());
    RawEigen out;
    out.values.resize(n);
    if (vectors) out.vectors.resize(n, n);
    cd dummy;
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n,
                                          out.values.data(), &dummy, 1, vectors ? out.vectors.data() : &dummy,
                                          vectors ? n : 1);
    require(info == 0, ErrorKind::numerical, "zgeev failed to converge (info " + std::to_string(info) + ")");
    return out;
}

inline RawEigen dgeev(Eigen::MatrixXd a, bool vectors)
{
    const auto n = static_cast<lapack_int>(a.rows());
    Eigen::VectorXd wr(n), wi(n);
    Eigen::MatrixXd vr;
    if (vectors) vr.resize(n, n);
    double dummy = 0.0;
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n, wr.data(),
                                          wi.data(), &dummy, 1, vectors ? vr.data() : &dummy, vectors ? n : 1);
    require(info == 0, ErrorKind::numerical, "dgeev failed to converge (info " + std::to_string(info) + ")");
    RawEigen out;
    out.values.resize(n);
    for (lapack_int j = 0; j < n; ++j) out.values[j] = cd(wr[j], wi[j]);
    if (vectors) {
        out.vectors.resize(n, n);
        for (lapack_int j = 0; j < n; ++j) {
            if (wi[j] != 0.0 && j + 1 < n) {
                out.vectors.col(j) = vr.col(j).cast<cd>() + cd(0.0, 1.0) * vr.col(j + 1).cast<cd>();
                out.vectors.col(j + 1) = out.vectors.col(j).conjugate();
                ++j;
            } else {
                out.vectors.col(j) = vr.col(j).cast<cd>();
            }
        }
    }
    return out;
}

/// Scales each column to unit norm with its largest-magnitude entry real positive.
inline void fix_phases(DenseMatrix& v)
{
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double nrm = v.col(j).norm();
        if (nrm == 0.0) continue;
        v.col(j) /= nrm;
        Eigen::Index best = 0;
        double bmax = -1.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            // first index attaining the maximum (up to rounding) so ties resolve deterministically
            const double a = std::abs(v(i, j));
            if (a > bmax * (1.0 + 1e-12)) {
                bmax = a;
                best = i;
            }
        }
        v.col(j) *= std::conj(v(best, j)) / std::abs(v(best, j));
        v(best, j) = cd(std::abs(v(best, j)), 0.0);
    }
}

/// Replaces eigenvalues of numerically coalesced clusters by their means.
inline void cluster_means(DenseVector& w, double tol)
{
    const Eigen::Index n = w.size();
    std::vector<int> group(static_cast<std::size_t>(n), -1);
    int g = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (group[i] >= 0) continue;
        std::vector<Eigen::Index> members{i};
        group[i] = g;
        for (std::size_t q = 0; q < members.size(); ++q)
            for (Eigen::Index j = 0; j < n; ++j)
                if (group[j] < 0 && std::abs(w[j] - w[members[q]]) <= tol) {
                    group[j] = g;
                    members.push_back(j);
                }
        cd mean = 0.0;
        for (auto m : members) mean += w[m];
        mean /= static_cast<double>(members.size());
        for (auto m : members) w[m] = mean;
        ++g;
    }
}

}  // namespace detail

inline double one_norm(const DenseMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

/// Dense non-Hermitian eigendecomposition with bi-orthonormal left vectors.
inline EigenSystem eigensolve(const OperatorBlock& block, const EigenOptions& opt = {})
{
    require(block.square(), ErrorKind::domain, "eigensolve needs a square block");
    detail::check_finite(block.matrix);
    EigenSystem es;
    es.degree = block.source;
    es.layout = block.layout;
    const Eigen::Index n = block.rows();
    if (n == 0) return es;

    detail::RawEigen raw;
    std::optional<SparseMatrix> U;
    if (opt.real_basis && block.layout && is_real_operator(block)) {
        U = detail::real_basis(*block.layout, block.source);
        const SparseMatrix ar = (*U) * block.matrix * SparseMatrix(U->adjoint());
        raw = detail::dgeev(DenseMatrix(ar).real(), opt.vectors);
        if (opt.vectors) raw.vectors = SparseMatrix(U->adjoint()) * raw.vectors;
    } else {
        raw = detail::zgeev(block.dense(), opt.vectors);
    }

    const auto order = detail::sort_order(raw.values);
    es.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) es.values[i] = raw.values[order[static_cast<std::size_t>(i)]];
    const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
    if (!opt.vectors) return es;

    es.right.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) es.right.col(i) = raw.vectors.col(order[static_cast<std::size_t>(i)]);
    detail::fix_phases(es.right);
    Eigen::PartialPivLU<DenseMatrix> lu(es.right);
    es.left = lu.inverse();
    es.condition = one_norm(es.right) * one_norm(es.left);
    if (!std::isfinite(es.condition) || es.condition > opt.defect_condition) {
        es.near_defective = true;
        detail::cluster_means(es.values, 1e-6 * scale);
    }
    es.biorthogonality_residual =
        (es.left * es.right - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    return es;
}

/// Eigenvalues only.
inline DenseVector eigenvalues(const OperatorBlock& block)
{
    EigenOptions o;
    o.vectors = false;
    return eigensolve(block, o).values;
}

/// Ritz value of the shift-invert Arnoldi process together with its residual estimate.
struct RitzValue {
    cd value;
    double residual = 0.0;
};

/// Eigenvalues of a sparse matrix nearest `sigma`, by Arnoldi on (A - sigma)^{-1} with
/// explicit restarts.  The starting vector is a fixed pseudo-random vector, so results are
/// reproducible.  Exactly repeated eigenvalues are returned once.
inline std::vector<RitzValue> shift_invert_eigs(const SparseMatrix& A, cd sigma, int nev, int krylov = 60,
                                                int max_restarts = 2, double tol = 1e-11)
{
    const Eigen::Index n = A.rows();
    require(A.cols() == n, ErrorKind::domain, "shift_invert_eigs needs a square matrix");
    nev = std::min<int>(nev, static_cast<int>(n));
    krylov = std::min<int>(std::max(krylov, 2 * nev + 2), static_cast<int>(n));

    SparseMatrix shifted = A;
    {
        SparseMatrix I(n, n);
        I.setIdentity();
        shifted -= sigma * I;
    }
    shifted.makeCompressed();
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(shifted);
    lu.factorize(shifted);
    require(lu.info() == Eigen::Success, ErrorKind::numerical, "sparse LU of the shifted operator failed");

    std::mt19937_64 gen(0x5eed);
    std::normal_distribution<double> nd;
    DenseVector v0(n);
    for (Eigen::Index i = 0; i < n; ++i) v0[i] = cd(nd(gen), nd(gen));

    std::vector<RitzValue> best;
    for (int restart = 0; restart <= max_restarts; ++restart) {
        const int m = krylov;
        DenseMatrix V(n, m + 1);
        DenseMatrix H = DenseMatrix::Zero(m + 1, m);
        V.col(0) = v0 / v0.norm();
        int steps = m;
        for (int j = 0; j < m; ++j) {
            DenseVector w = lu.solve(V.col(j));
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) {
                    const cd h = V.col(i).dot(w);
                    H(i, j) += h;
                    w -= h * V.col(i);
                }
            H(j + 1, j) = w.norm();
            if (std::abs(H(j + 1, j)) < 1e-14 * H.topLeftCorner(j + 1, j + 1).norm()) {
                steps = j + 1;
                break;
            }
            V.col(j + 1) = w / H(j + 1, j).real();
        }
        Eigen::ComplexEigenSolver<DenseMatrix> ces(H.topLeftCorner(steps, steps));
        const DenseVector theta = ces.eigenvalues();
        const DenseMatrix Y = ces.eigenvectors();
        std::vector<int> idx(static_cast<std::size_t>(steps));
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(theta[a]) > std::abs(theta[b]); });
        const double hnext = steps < m ? 0.0 : std::abs(H(steps, steps - 1));
        best.clear();
        bool converged = true;
        DenseVector next = DenseVector::Zero(n);
        for (int q = 0; q < std::min(nev, steps); ++q) {
            const int i = idx[static_cast<std::size_t>(q)];
            const double res = hnext * std::abs(Y(steps - 1, i)) / std::abs(theta[i]);
            best.push_back({sigma + 1.0 / theta[i], res * std::abs(1.0 / theta[i])});
            if (res > tol) converged = false;
            next += V.leftCols(steps) * Y.col(i);
        }
        if (converged || restart == max_restarts) break;
        v0 = next;
    }
    std::sort(best.begin(), best.end(), [](const RitzValue& a, const RitzValue& b) {
        return a.value.real() != b.value.real() ? a.value.real() < b.value.real() : a.value.imag() < b.value.imag();
    });
    return best;
}

}  // namespace sts
