#pragma once

#include <optional>
#include <vector>

#include "sts/core.hpp"
#include "sts/forms.hpp"
#include "sts/layout.hpp"

namespace sts {

/// Linear map from degree-`source` forms to degree-`target` forms.
///
/// Assembled operators are banded in wavevector space, so the matrix is held in
/// sparse storage; `dense()` materializes it.  Blocks built from raw matrices
/// carry no layout.
struct OperatorBlock {
    int source = 0;
    int target = 0;
    std::optional<BasisLayout> layout;
    SparseMatrix matrix;

    OperatorBlock() = default;
    OperatorBlock(const BasisLayout& l, int source_degree, int target_degree, SparseMatrix m)
        : source(source_degree), target(target_degree), layout(l), matrix(std::move(m))
    {
        require(static_cast<std::size_t>(matrix.rows()) == l.size(target_degree) &&
                    static_cast<std::size_t>(matrix.cols()) == l.size(source_degree),
                ErrorKind::domain, "operator block dimensions do not match layout");
    }
    /// Layout-free square block (used for generic matrices).
    static OperatorBlock from_dense(const DenseMatrix& m, int degree = 0)
    {
        OperatorBlock b;
        b.source = b.target = degree;
        b.matrix = m.sparseView();
        return b;
    }

    Eigen::Index rows() const { return matrix.rows(); }
    Eigen::Index cols() const { return matrix.cols(); }
    bool square() const { return rows() == cols(); }
    DenseMatrix dense() const { return DenseMatrix(matrix); }

    FormVector apply(const FormVector& psi) const
    {
        require(layout.has_value() && psi.layout == *layout && psi.degree == source, ErrorKind::degree,
                "operator applied to a form of the wrong degree or layout");
        return FormVector(*layout, target, matrix * psi.coeffs);
    }

    double frobenius() const { return matrix.norm(); }
};

inline OperatorBlock compose(const OperatorBlock& a, const OperatorBlock& b)
{
    require(a.source == b.target && a.cols() == b.rows(), ErrorKind::degree,
            "operator composition degree mismatch");
    OperatorBlock out;
    out.source = b.source;
    out.target = a.target;
    out.layout = a.layout ? a.layout : b.layout;
    out.matrix = (a.matrix * b.matrix).pruned(0.0);
    return out;
}

inline OperatorBlock operator*(const OperatorBlock& a, const OperatorBlock& b) { return compose(a, b); }

inline OperatorBlock operator+(const OperatorBlock& a, const OperatorBlock& b)
{
    require(a.source == b.source && a.target == b.target && a.rows() == b.rows() && a.cols() == b.cols(),
            ErrorKind::degree, "operator sum degree mismatch");
    OperatorBlock out = a;
    out.matrix = (a.matrix + b.matrix).pruned(0.0);
    return out;
}

inline OperatorBlock operator*(cd s, const OperatorBlock& a)
{
    OperatorBlock out = a;
    out.matrix = (s * a.matrix).pruned(0.0);
    return out;
}

inline OperatorBlock operator-(const OperatorBlock& a, const OperatorBlock& b) { return a + cd(-1.0) * b; }

inline OperatorBlock adjoint(const OperatorBlock& a)
{
    OperatorBlock out;
    out.source = a.target;
    out.target = a.source;
    out.layout = a.layout;
    out.matrix = SparseMatrix(a.matrix.adjoint());
    return out;
}

/// Zero map between two degrees (used at the ends of the exterior complex).
inline OperatorBlock zero_block(const BasisLayout& l, int source, int target)
{
    SparseMatrix m(static_cast<Eigen::Index>(l.size(target)), static_cast<Eigen::Index>(l.size(source)));
    return OperatorBlock(l, source, target, std::move(m));
}

inline OperatorBlock identity_block(const BasisLayout& l, int k)
{
    SparseMatrix m(static_cast<Eigen::Index>(l.size(k)), static_cast<Eigen::Index>(l.size(k)));
    m.setIdentity();
    return OperatorBlock(l, k, k, std::move(m));
}

/// Largest |entry| of a sparse matrix.
inline double max_abs(const SparseMatrix& m)
{
    double r = 0.0;
    for (Eigen::Index j = 0; j < m.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(m, j); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

/// Whether the block maps real forms to real forms: A(-r, -c) = conj(A(r, c)).
inline bool is_real_operator(const OperatorBlock& a, double tol = 1e-13)
{
    if (!a.layout) return false;
    const BasisLayout& l = *a.layout;
    const std::size_t n = l.cells();
    auto mirror = [&](Eigen::Index i) {
        const std::size_t m = static_cast<std::size_t>(i) / n, c = static_cast<std::size_t>(i) % n;
        return static_cast<Eigen::Index>(l.index(m, l.negated_cell(c)));
    };
    const double scale = std::max(1.0, max_abs(a.matrix));
    for (Eigen::Index j = 0; j < a.matrix.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(a.matrix, j); it; ++it)
            if (std::abs(a.matrix.coeff(mirror(it.row()), mirror(it.col())) - std::conj(it.value())) >
                tol * scale)
                return false;
    return true;
}

}  // namespace sts
