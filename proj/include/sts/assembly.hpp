#pragma once

#include <string>
#include <vector>

#include "sts/exterior.hpp"
#include "sts/parallel.hpp"

namespace sts {

/// dx = F(x) dt + sqrt(2 Theta) e_a(x) dW^a on T^D, interpreted with parameter alpha.
struct SdeModel {
    BasisLayout layout{1, 1};
    FlowField drift{1};
    std::vector<FlowField> noise;
    double theta = 0.0;
    double alpha = 0.5;

    int dimension() const { return layout.dimension(); }

    void validate() const
    {
        const int D = layout.dimension();
        require(drift.dimension() == D, ErrorKind::domain, "drift dimension differs from layout dimension");
        for (const auto& e : noise)
            require(e.dimension() == D, ErrorKind::domain, "noise field dimension differs from layout dimension");
        require(theta >= 0.0, ErrorKind::domain, "temperature must be nonnegative");
        require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::domain, "alpha must lie in [0, 1]");
        require(theta == 0.0 || !noise.empty(), ErrorKind::domain, "positive temperature needs a noise field");
    }
    bool additive_noise() const
    {
        for (const auto& e : noise)
            if (!e.is_constant()) return false;
        return true;
    }
};

enum class Provenance { stratonovich, alpha, time_reversed, hodge_laplacian, kinematic_dynamo };

inline std::string to_string(Provenance p)
{
    switch (p) {
    case Provenance::stratonovich: return "stratonovich";
    case Provenance::alpha: return "alpha";
    case Provenance::time_reversed: return "time-reversed";
    case Provenance::hodge_laplacian: return "hodge-laplacian";
    case Provenance::kinematic_dynamo: return "kinematic-dynamo";
    }
    return "unknown";
}

/// One square block per degree 0..D.
struct SeoBlocks {
    std::vector<OperatorBlock> blocks;
    Provenance provenance = Provenance::stratonovich;
    double alpha = 0.5;

    int dimension() const { return static_cast<int>(blocks.size()) - 1; }
    const OperatorBlock& operator[](int k) const { return blocks.at(static_cast<std::size_t>(k)); }
    OperatorBlock& operator[](int k) { return blocks.at(static_cast<std::size_t>(k)); }
    const BasisLayout& layout() const { return *blocks.front().layout; }
};

/// Lie derivative via the Cartan formula with the projected interior product,
/// d P(i_G) + P(i_G) d.
inline OperatorBlock lie_matrix(const FlowField& G, const BasisLayout& l, int k)
{
    const int D = l.dimension();
    require(k >= 0 && k <= D, ErrorKind::degree, "lie_matrix: degree out of range");
    if (D == 0) return zero_block(l, k, k);
    if (k == 0) return interior_matrix(G, l, 1) * d_matrix(l, 0);
    if (k == D) return d_matrix(l, D - 1) * interior_matrix(G, l, D);
    return d_matrix(l, k - 1) * interior_matrix(G, l, k) + interior_matrix(G, l, k + 1) * d_matrix(l, k);
}

namespace detail {

inline OperatorBlock diffusion_part(const SdeModel& m, int k)
{
    OperatorBlock acc = zero_block(m.layout, k, k);
    for (const auto& e : m.noise) {
        const OperatorBlock L = lie_matrix(e, m.layout, k);
        acc = acc + L * L;
    }
    return acc;
}

inline SeoBlocks assemble(const SdeModel& m, const FlowField& drift, double drift_sign, Provenance p)
{
    m.validate();
    require(drift.dimension() == m.dimension(), ErrorKind::domain, "drift dimension mismatch");
    const int D = m.dimension();
    SeoBlocks out;
    out.provenance = p;
    out.alpha = m.alpha;
    out.blocks.resize(static_cast<std::size_t>(D + 1));
    parallel_for(static_cast<std::size_t>(D + 1), [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        OperatorBlock h = cd(drift_sign) * lie_matrix(drift, m.layout, k);
        if (m.theta != 0.0) h = h - cd(m.theta) * diffusion_part(m, k);
        out.blocks[kk] = std::move(h);
    });
    return out;
}

}  // namespace detail

/// H^(k) = L_F - Theta sum_a L_{e_a} L_{e_a} (Stratonovich).
inline SeoBlocks seo_blocks(const SdeModel& m)
{
    require(m.theta >= 0.0, ErrorKind::domain, "seo_blocks: negative temperature");
    return detail::assemble(m, m.drift, 1.0, Provenance::stratonovich);
}

/// F_alpha^i = F^i + 2 Theta (alpha - 1/2) sum_a sum_j (d_j e_a^i) e_a^j, computed exactly.
inline FlowField alpha_drift(const FlowField& F, const std::vector<FlowField>& noise, double theta, double alpha)
{
    require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::domain, "alpha must lie in [0, 1]");
    FlowField out = F;
    const double c = 2.0 * theta * (alpha - 0.5);
    if (c == 0.0) return out;
    const int D = F.dimension();
    for (const auto& e : noise)
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) out[i] += c * trig_mul(trig_diff(e[i], j), e[j]);
    return out;
}

/// SEO of the alpha-interpreted SDE: the Stratonovich SEO with drift F_alpha.
inline SeoBlocks seo_alpha(const SdeModel& m)
{
    if (m.alpha == 0.5) return seo_blocks(m);
    if (m.additive_noise()) {
        SeoBlocks s = seo_blocks(m);
        s.provenance = Provenance::alpha;
        return s;
    }
    return detail::assemble(m, alpha_drift(m.drift, m.noise, m.theta, m.alpha), 1.0, Provenance::alpha);
}

/// Fokker-Planck operator on densities built from derivative and convolution matrices,
/// d_i F_alpha^i - Theta d_i e_a^i d_j e_a^j, without going through the Cartan formula.
inline OperatorBlock fp_matrix_direct(const FlowField& F, const std::vector<FlowField>& noise, double theta,
                                      double alpha, const BasisLayout& l)
{
    const int D = l.dimension();
    const FlowField Fa = alpha_drift(F, noise, theta, alpha);
    std::vector<OperatorBlock> partial;
    for (int i = 0; i < D; ++i) partial.push_back(partial_matrix(l, D, i));
    OperatorBlock h = zero_block(l, D, D);
    for (int i = 0; i < D; ++i)
        if (!Fa[i].empty()) h = h + partial[i] * multiply_matrix(Fa[i], l, D);
    for (const auto& e : noise) {
        OperatorBlock de = zero_block(l, D, D);
        for (int i = 0; i < D; ++i)
            if (!e[i].empty()) de = de + partial[i] * multiply_matrix(e[i], l, D);
        h = h - cd(theta) * (de * de);
    }
    return h;
}

/// H_T^(k) = -L_F - Theta sum_a L_{e_a}^2.
inline SeoBlocks seo_time_reversed(const SdeModel& m)
{
    return detail::assemble(m, m.drift, -1.0, Provenance::time_reversed);
}

/// Flat Hodge Laplacian d d^dagger + d^dagger d per degree.
inline SeoBlocks hodge_laplacian_blocks(const BasisLayout& l)
{
    const int D = l.dimension();
    SeoBlocks out;
    out.provenance = Provenance::hodge_laplacian;
    for (int k = 0; k <= D; ++k) {
        OperatorBlock h = zero_block(l, k, k);
        if (k > 0) h = h + d_matrix(l, k - 1) * codifferential_matrix(l, k);
        if (k < D) h = h + codifferential_matrix(l, k + 1) * d_matrix(l, k);
        out.blocks.push_back(std::move(h));
    }
    return out;
}

/// Kinematic-dynamo operator L_v + eta Delta_H on T^3; the degree-2 block evolves the magnetic field.
inline SeoBlocks kd_operator(const FlowField& v, double eta, const BasisLayout& l)
{
    require(l.dimension() == 3, ErrorKind::domain, "kd_operator requires a three-dimensional layout");
    require(eta > 0.0, ErrorKind::domain, "kd_operator requires positive diffusivity");
    require(v.dimension() == 3, ErrorKind::domain, "dynamo flow must have three components");
    const SeoBlocks lap = hodge_laplacian_blocks(l);
    SeoBlocks out;
    out.provenance = Provenance::kinematic_dynamo;
    out.blocks.resize(4);
    parallel_for(4, [&](std::size_t k) {
        out.blocks[k] = lie_matrix(v, l, static_cast<int>(k)) + cd(eta) * lap[static_cast<int>(k)];
    });
    return out;
}

/// Langevin model dx = -grad U dt + sqrt(2 Theta) dW with the identity noise frame.
inline SdeModel langevin_model(const BasisLayout& l, const TrigField& potential, double theta)
{
    SdeModel m;
    m.layout = l;
    m.drift = gradient_flow(potential);
    m.noise = identity_frame(l.dimension());
    m.theta = theta;
    return m;
}

/// Hermitian Witten-Laplacian form of a Langevin SEO, assembled independently of the Cartan path:
/// Theta (d_W d_W^dagger + d_W^dagger d_W) with d_W = d - (2 Theta)^{-1} dU ^ .
inline DenseMatrix langevin_hermitian_block(const BasisLayout& l, const TrigField& potential, double theta, int k)
{
    require(theta > 0.0, ErrorKind::domain, "Hermitian Langevin form needs positive temperature");
    const int D = l.dimension();
    const FlowField gradU = -1.0 * gradient_flow(potential);
    auto dW = [&](int p) {
        // dU ^ on degree-p forms is the adjoint of the interior product with grad U.
        DenseMatrix w = adjoint(interior_matrix(gradU, l, p + 1)).dense();
        return DenseMatrix(d_matrix(l, p).dense() - (0.5 / theta) * w);
    };
    DenseMatrix h = DenseMatrix::Zero(static_cast<Eigen::Index>(l.size(k)), static_cast<Eigen::Index>(l.size(k)));
    if (k < D) {
        const DenseMatrix a = dW(k);
        h += a.adjoint() * a;
    }
    if (k > 0) {
        const DenseMatrix b = dW(k - 1);
        h += b * b.adjoint();
    }
    return theta * h;
}

}  // namespace sts
