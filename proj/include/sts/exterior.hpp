#pragma once

#include <vector>

#include "sts/layout.hpp"
#include "sts/operator_block.hpp"
#include "sts/trig_field.hpp"

namespace sts {

namespace detail {

using Triplets = std::vector<Eigen::Triplet<cd>>;

inline SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const Triplets& t)
{
    SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(t.begin(), t.end());
    m.prune(cd(0.0));
    return m;
}

}  // namespace detail

/// Exterior derivative d : Omega^k -> Omega^{k+1}, diagonal in wavevector.
inline OperatorBlock d_matrix(const BasisLayout& l, int k)
{
    const int D = l.dimension();
    require(k >= 0, ErrorKind::degree, "d_matrix: negative degree");
    require(k < D, ErrorKind::degree, "d_matrix: degree overflow (k = D)");
    detail::Triplets t;
    const auto& src = l.multi_indices(k);
    for (std::size_t m = 0; m < src.size(); ++m) {
        for (int j = 0; j < D; ++j) {
            if (src[m].contains(j)) continue;
            const MultiIndex J{src[m].mask | (1u << j)};
            const std::size_t mj = l.multi_position(J);
            const double s = src[m].sign_before(j);
            for (std::size_t c = 0; c < l.cells(); ++c) {
                const int kj = l.wave_vector(c)[j];
                if (kj != 0) t.emplace_back(l.index(mj, c), l.index(m, c), cd(0.0, s * kj));
            }
        }
    }
    return OperatorBlock(l, k, k + 1, detail::from_triplets(l.size(k + 1), l.size(k), t));
}

/// Galerkin projection of the interior product i_G : Omega^k -> Omega^{k-1}.
/// Multiplication by G^i is a wavevector convolution truncated to the layout box.
inline OperatorBlock interior_matrix(const FlowField& G, const BasisLayout& l, int k)
{
    const int D = l.dimension();
    require(k <= D, ErrorKind::degree, "interior_matrix: degree above dimension");
    require(k >= 1, ErrorKind::degree, "interior_matrix: degree underflow (k = 0)");
    require(G.dimension() == D, ErrorKind::domain, "interior_matrix: field dimension mismatch");
    detail::Triplets t;
    const auto& src = l.multi_indices(k);
    for (std::size_t m = 0; m < src.size(); ++m) {
        for (int i = 0; i < D; ++i) {
            if (!src[m].contains(i) || G[i].empty()) continue;
            const MultiIndex J{src[m].mask & ~(1u << i)};
            const std::size_t mj = l.multi_position(J);
            const double s = src[m].sign_before(i);
            for (std::size_t c = 0; c < l.cells(); ++c) {
                const WaveVector kc = l.wave_vector(c);
                for (const auto& [q, g] : G[i].coefficients())
                    if (auto cr = l.cell_index(kc + q)) t.emplace_back(l.index(mj, *cr), l.index(m, c), s * g);
            }
        }
    }
    return OperatorBlock(l, k, k - 1, detail::from_triplets(l.size(k - 1), l.size(k), t));
}

/// Multiplication by a scalar field, acting channel-wise as a truncated convolution.
inline OperatorBlock multiply_matrix(const TrigField& f, const BasisLayout& l, int k)
{
    require(f.dimension() == l.dimension(), ErrorKind::domain, "multiply_matrix: dimension mismatch");
    detail::Triplets t;
    const std::size_t nm = l.multi_indices(k).size();
    for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t c = 0; c < l.cells(); ++c) {
            const WaveVector kc = l.wave_vector(c);
            for (const auto& [q, v] : f.coefficients())
                if (auto cr = l.cell_index(kc + q)) t.emplace_back(l.index(m, *cr), l.index(m, c), v);
        }
    return OperatorBlock(l, k, k, detail::from_triplets(l.size(k), l.size(k), t));
}

/// Flat-metric Hodge star: dx^I -> eps(I, I^c) dx^{I^c}.
inline OperatorBlock hodge_star_matrix(const BasisLayout& l, int k)
{
    const int D = l.dimension();
    require(k >= 0 && k <= D, ErrorKind::degree, "hodge_star_matrix: degree out of range");
    detail::Triplets t;
    const MultiIndex full = l.full_index();
    const auto& src = l.multi_indices(k);
    for (std::size_t m = 0; m < src.size(); ++m) {
        const MultiIndex J{full.mask & ~src[m].mask};
        const std::size_t mj = l.multi_position(J);
        const double s = shuffle_sign(src[m], J);
        for (std::size_t c = 0; c < l.cells(); ++c) t.emplace_back(l.index(mj, c), l.index(m, c), cd(s));
    }
    return OperatorBlock(l, k, D - k, detail::from_triplets(l.size(D - k), l.size(k), t));
}

/// Inverse Hodge star on degree-k forms: (-1)^{k(D-k)} star.
inline OperatorBlock hodge_star_inverse(const BasisLayout& l, int k)
{
    const int D = l.dimension();
    const double s = ((k * (D - k)) % 2) ? -1.0 : 1.0;
    return cd(s) * hodge_star_matrix(l, k);
}

/// Flat-metric codifferential d^dagger = -sum_i i_i d/dx^i : Omega^k -> Omega^{k-1}.
inline OperatorBlock codifferential_matrix(const BasisLayout& l, int k)
{
    const int D = l.dimension();
    require(k <= D, ErrorKind::degree, "codifferential_matrix: degree above dimension");
    require(k >= 1, ErrorKind::degree, "codifferential_matrix: degree underflow (k = 0)");
    detail::Triplets t;
    const auto& src = l.multi_indices(k);
    for (std::size_t m = 0; m < src.size(); ++m) {
        for (int i = 0; i < D; ++i) {
            if (!src[m].contains(i)) continue;
            const MultiIndex J{src[m].mask & ~(1u << i)};
            const std::size_t mj = l.multi_position(J);
            const double s = src[m].sign_before(i);
            for (std::size_t c = 0; c < l.cells(); ++c) {
                const int ki = l.wave_vector(c)[i];
                if (ki != 0) t.emplace_back(l.index(mj, c), l.index(m, c), cd(0.0, -s * ki));
            }
        }
    }
    return OperatorBlock(l, k, k - 1, detail::from_triplets(l.size(k - 1), l.size(k), t));
}

/// Partial derivative d/dx^{axis+1} acting channel-wise on degree-k forms.
inline OperatorBlock partial_matrix(const BasisLayout& l, int k, int axis)
{
    require(axis >= 0 && axis < l.dimension(), ErrorKind::domain, "partial_matrix: axis out of range");
    detail::Triplets t;
    const std::size_t nm = l.multi_indices(k).size();
    for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t c = 0; c < l.cells(); ++c) {
            const int ka = l.wave_vector(c)[axis];
            if (ka != 0) t.emplace_back(l.index(m, c), l.index(m, c), cd(0.0, ka));
        }
    return OperatorBlock(l, k, k, detail::from_triplets(l.size(k), l.size(k), t));
}

}  // namespace sts
