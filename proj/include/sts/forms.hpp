#pragma once

#include <cmath>

#include "sts/core.hpp"
#include "sts/layout.hpp"
#include "sts/trig_field.hpp"

namespace sts {

/// Coefficient vector of a degree-k form in a BasisLayout.
struct FormVector {
    int degree = 0;
    BasisLayout layout{1, 0};
    DenseVector coeffs;

    FormVector() = default;
    FormVector(const BasisLayout& l, int k) : degree(k), layout(l), coeffs(DenseVector::Zero(l.size(k))) {}
    FormVector(const BasisLayout& l, int k, DenseVector c) : degree(k), layout(l), coeffs(std::move(c))
    {
        require(static_cast<std::size_t>(coeffs.size()) == l.size(k), ErrorKind::domain,
                "form coefficient vector length does not match layout");
    }

    cd& at(MultiIndex I, const WaveVector& k)
    {
        auto cell = layout.cell_index(k);
        require(cell.has_value(), ErrorKind::domain, "wavevector outside layout box");
        return coeffs[layout.index(layout.multi_position(I), *cell)];
    }
    cd at(MultiIndex I, const WaveVector& k) const
    {
        auto cell = layout.cell_index(k);
        if (!cell) return {0.0, 0.0};
        return coeffs[layout.index(layout.multi_position(I), *cell)];
    }

    /// Largest violation of coeff(I, -k) = conj(coeff(I, k)).
    double reality_defect() const
    {
        const std::size_t n = layout.cells();
        double worst = 0.0;
        for (std::size_t m = 0; m < layout.multi_indices(degree).size(); ++m)
            for (std::size_t c = 0; c < n; ++c)
                worst = std::max(worst, std::abs(coeffs[layout.index(m, layout.negated_cell(c))] -
                                                 std::conj(coeffs[layout.index(m, c)])));
        return worst;
    }

    /// Component function of the form along dx^I as a TrigField.
    TrigField component(MultiIndex I) const
    {
        TrigField f(layout.dimension());
        const std::size_t m = layout.multi_position(I);
        for (std::size_t c = 0; c < layout.cells(); ++c) {
            cd v = coeffs[layout.index(m, c)];
            if (v != cd(0.0, 0.0)) f.add(layout.wave_vector(c), v);
        }
        return f;
    }

    /// Same form re-expressed on a layout with larger (or equal) truncation.
    FormVector embedded(const BasisLayout& target) const
    {
        require(target.dimension() == layout.dimension() && target.truncation() >= layout.truncation(),
                ErrorKind::domain, "can only embed into a larger layout");
        FormVector out(target, degree);
        for (std::size_t m = 0; m < layout.multi_indices(degree).size(); ++m)
            for (std::size_t c = 0; c < layout.cells(); ++c)
                out.coeffs[target.index(m, *target.cell_index(layout.wave_vector(c)))] =
                    coeffs[layout.index(m, c)];
        return out;
    }
};

/// Builds a form from component fields (one TrigField per multi-index, in layout order).
/// Modes outside the layout box are dropped.
inline FormVector form_from_components(const BasisLayout& layout, int degree,
                                       const std::vector<TrigField>& components)
{
    FormVector out(layout, degree);
    require(components.size() == layout.multi_indices(degree).size(), ErrorKind::domain,
            "wrong number of form components");
    for (std::size_t m = 0; m < components.size(); ++m)
        for (const auto& [k, c] : components[m].coefficients())
            if (auto cell = layout.cell_index(k)) out.coeffs[layout.index(m, *cell)] += c;
    return out;
}

/// Integral over T^D of a top-degree form: (2 pi)^D times its k = 0 coefficient.
inline cd integrate_top(const FormVector& psi)
{
    const int D = psi.layout.dimension();
    require(psi.degree == D, ErrorKind::degree, "integrate_top needs a top-degree form");
    return std::pow(two_pi, D) * psi.coeffs[*psi.layout.cell_index({0, 0, 0})];
}

/// Exterior product a ^ b without truncation loss; the result lives on the layout with
/// truncation N_a + N_b.
inline FormVector wedge(const FormVector& a, const FormVector& b)
{
    const BasisLayout& la = a.layout;
    const BasisLayout& lb = b.layout;
    require(la.dimension() == lb.dimension(), ErrorKind::domain, "wedge: dimension mismatch");
    const int p = a.degree, q = b.degree, D = la.dimension();
    require(p + q <= D, ErrorKind::degree, "wedge: total degree exceeds dimension");
    BasisLayout lr(D, la.truncation() + lb.truncation());
    FormVector out(lr, p + q);
    const auto& Ia = la.multi_indices(p);
    const auto& Ib = lb.multi_indices(q);
    for (std::size_t ma = 0; ma < Ia.size(); ++ma) {
        for (std::size_t mb = 0; mb < Ib.size(); ++mb) {
            if (Ia[ma].mask & Ib[mb].mask) continue;
            const MultiIndex Ir{Ia[ma].mask | Ib[mb].mask};
            const double s = shuffle_sign(Ia[ma], Ib[mb]);
            const std::size_t mr = lr.multi_position(Ir);
            for (std::size_t ca = 0; ca < la.cells(); ++ca) {
                const cd va = a.coeffs[la.index(ma, ca)];
                if (va == cd(0.0, 0.0)) continue;
                const WaveVector ka = la.wave_vector(ca);
                for (std::size_t cb = 0; cb < lb.cells(); ++cb) {
                    const cd vb = b.coeffs[lb.index(mb, cb)];
                    if (vb == cd(0.0, 0.0)) continue;
                    out.coeffs[lr.index(mr, *lr.cell_index(ka + lb.wave_vector(cb)))] += s * va * vb;
                }
            }
        }
    }
    return out;
}

/// bra ^ ket for complementary degrees (D-k, k); a top form on the doubled layout.
inline FormVector wedge_density(const FormVector& bra, const FormVector& ket)
{
    require(bra.degree + ket.degree == bra.layout.dimension(), ErrorKind::degree,
            "wedge_density needs complementary degrees");
    return wedge(bra, ket);
}

/// Row vector u with u . psi = integral(bra ^ psi) for every degree-k form psi.
inline Eigen::RowVectorXcd dual_row(const FormVector& bra)
{
    const BasisLayout& l = bra.layout;
    const int D = l.dimension(), kb = bra.degree, k = D - kb;
    const MultiIndex full = l.full_index();
    const double vol = std::pow(two_pi, D);
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(l.size(k));
    const auto& Ib = l.multi_indices(kb);
    for (std::size_t mb = 0; mb < Ib.size(); ++mb) {
        const MultiIndex J{full.mask & ~Ib[mb].mask};
        const double s = shuffle_sign(Ib[mb], J);
        const std::size_t mj = l.multi_position(J);
        for (std::size_t c = 0; c < l.cells(); ++c)
            row[l.index(mj, l.negated_cell(c))] = vol * s * bra.coeffs[l.index(mb, c)];
    }
    return row;
}

/// Inverse of dual_row: the degree (D-k) form whose pairing with degree-k forms is `row`.
inline FormVector form_from_dual_row(const BasisLayout& l, int k, const Eigen::RowVectorXcd& row)
{
    const int D = l.dimension(), kb = D - k;
    require(static_cast<std::size_t>(row.size()) == l.size(k), ErrorKind::domain,
            "dual row length does not match layout");
    const MultiIndex full = l.full_index();
    const double vol = std::pow(two_pi, D);
    FormVector bra(l, kb);
    const auto& Ib = l.multi_indices(kb);
    for (std::size_t mb = 0; mb < Ib.size(); ++mb) {
        const MultiIndex J{full.mask & ~Ib[mb].mask};
        const double s = shuffle_sign(Ib[mb], J);
        const std::size_t mj = l.multi_position(J);
        for (std::size_t c = 0; c < l.cells(); ++c)
            bra.coeffs[l.index(mb, c)] = row[l.index(mj, l.negated_cell(c))] / (vol * s);
    }
    return bra;
}

}  // namespace sts
