#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sts/core.hpp"

namespace sts {

inline constexpr int max_dimension = 3;

/// Fourier wavevector; components beyond the layout dimension are zero.
using WaveVector = std::array<int, max_dimension>;

inline WaveVector operator+(const WaveVector& a, const WaveVector& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline WaveVector operator-(const WaveVector& a) { return {-a[0], -a[1], -a[2]}; }

inline int wave_norm_sq(const WaveVector& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

inline int bandwidth_of(const WaveVector& k)
{
    int b = 0;
    for (int c : k) b = std::max(b, c < 0 ? -c : c);
    return b;
}

/// Strictly increasing set of axes, stored as a bit mask (bit j <=> dx^{j+1}).
struct MultiIndex {
    unsigned mask = 0;

    int degree() const { return std::popcount(mask); }
    bool contains(int axis) const { return (mask >> axis) & 1u; }
    std::vector<int> axes() const
    {
        std::vector<int> out;
        for (int j = 0; j < max_dimension; ++j)
            if (contains(j)) out.push_back(j);
        return out;
    }
    /// (-1)^(number of axes in this index smaller than `axis`)
    int sign_before(int axis) const
    {
        return (std::popcount(mask & ((1u << axis) - 1u)) % 2) ? -1 : 1;
    }
    bool operator==(const MultiIndex&) const = default;
};

/// Sign of the permutation that sorts the concatenation (a, b) of disjoint index sets.
inline int shuffle_sign(MultiIndex a, MultiIndex b)
{
    int inversions = 0;
    for (int j : b.axes()) inversions += std::popcount(a.mask >> (j + 1));
    return inversions % 2 ? -1 : 1;
}

/// Truncated Fourier-multi-index basis of the exterior algebra on T^D.
///
/// A basis element is e^{i k.x} dx^I with |k_j| <= N.  Elements of degree p are
/// numbered multi-index outermost (lexicographic), wavevector innermost
/// (lexicographic, axis 1 slowest).
class BasisLayout {
public:
    BasisLayout(int dimension, int truncation) : dim_(dimension), trunc_(truncation)
    {
        require(dimension >= 1 && dimension <= max_dimension, ErrorKind::domain,
                "layout dimension must be 1, 2 or 3");
        require(truncation >= 0, ErrorKind::domain, "layout truncation must be nonnegative");
        side_ = 2 * trunc_ + 1;
        cells_ = 1;
        for (int j = 0; j < dim_; ++j) cells_ *= static_cast<std::size_t>(side_);
        multis_.resize(dim_ + 1);
        for (int k = 0; k <= dim_; ++k) {
            std::vector<int> cur;
            collect(k, 0, cur);
        }
    }

    int dimension() const { return dim_; }
    int truncation() const { return trunc_; }
    int side() const { return side_; }
    std::size_t cells() const { return cells_; }
    std::size_t size(int k) const
    {
        check_degree(k);
        return multis_[k].size() * cells_;
    }
    const std::vector<MultiIndex>& multi_indices(int k) const
    {
        check_degree(k);
        return multis_[k];
    }
    std::size_t multi_position(MultiIndex I) const
    {
        const auto& list = multis_[I.degree()];
        for (std::size_t p = 0; p < list.size(); ++p)
            if (list[p] == I) return p;
        fail(ErrorKind::domain, "multi-index not in layout");
    }
    MultiIndex full_index() const { return MultiIndex{(1u << dim_) - 1u}; }

    bool in_box(const WaveVector& k) const
    {
        for (int j = 0; j < dim_; ++j)
            if (k[j] < -trunc_ || k[j] > trunc_) return false;
        for (int j = dim_; j < max_dimension; ++j)
            if (k[j] != 0) return false;
        return true;
    }
    std::optional<std::size_t> cell_index(const WaveVector& k) const
    {
        if (!in_box(k)) return std::nullopt;
        std::size_t c = 0;
        for (int j = 0; j < dim_; ++j) c = c * side_ + static_cast<std::size_t>(k[j] + trunc_);
        return c;
    }
    WaveVector wave_vector(std::size_t cell) const
    {
        WaveVector k{0, 0, 0};
        for (int j = dim_ - 1; j >= 0; --j) {
            k[j] = static_cast<int>(cell % side_) - trunc_;
            cell /= side_;
        }
        return k;
    }
    std::size_t negated_cell(std::size_t cell) const { return cells_ - 1 - cell; }
    std::size_t index(std::size_t multi, std::size_t cell) const { return multi * cells_ + cell; }

    bool operator==(const BasisLayout& o) const { return dim_ == o.dim_ && trunc_ == o.trunc_; }

    BasisLayout with_truncation(int truncation) const { return BasisLayout(dim_, truncation); }

private:
    void check_degree(int k) const
    {
        require(k >= 0 && k <= dim_, ErrorKind::degree,
                "degree " + std::to_string(k) + " outside [0, " + std::to_string(dim_) + "]");
    }
    void collect(int k, int start, std::vector<int>& cur)
    {
        if (static_cast<int>(cur.size()) == k) {
            unsigned m = 0;
            for (int a : cur) m |= 1u << a;
            multis_[k].push_back(MultiIndex{m});
            return;
        }
        for (int a = start; a < dim_; ++a) {
            cur.push_back(a);
            collect(k, a + 1, cur);
            cur.pop_back();
        }
    }

    int dim_;
    int trunc_;
    int side_ = 1;
    std::size_t cells_ = 1;
    std::vector<std::vector<MultiIndex>> multis_;
};

}  // namespace sts
