#pragma once

#include <vector>

#include "sts/assembly.hpp"

namespace sts::models {

/// F = 0, identity noise frame.
inline SdeModel diffusion(int D, int N, double theta)
{
    SdeModel m;
    m.layout = BasisLayout(D, N);
    m.drift = FlowField(D);
    m.noise = identity_frame(D);
    m.theta = theta;
    return m;
}

/// Constant drift F = c.
inline SdeModel drift(int D, int N, double theta, const std::vector<double>& c)
{
    require(static_cast<int>(c.size()) == D, ErrorKind::domain, "drift velocity needs one entry per axis");
    SdeModel m = diffusion(D, N, theta);
    for (int i = 0; i < D; ++i) m.drift[i] = TrigField::constant(D, c[static_cast<std::size_t>(i)]);
    return m;
}

/// U = cos x1 + a cos 2x1.
inline TrigField double_well_potential(int D, double a)
{
    TrigField u = TrigField::cosine(D, {1, 0, 0});
    if (a != 0.0) u += TrigField::cosine(D, {2, 0, 0}, a);
    return u;
}

inline SdeModel langevin_cos(int D, int N, double theta)
{
    return langevin_model(BasisLayout(D, N), double_well_potential(D, 0.0), theta);
}

inline SdeModel langevin_double(int D, int N, double theta, double a)
{
    return langevin_model(BasisLayout(D, N), double_well_potential(D, a), theta);
}

/// F = (sin x2, 0) on T^2.
inline SdeModel shear_2d(int N, double theta)
{
    SdeModel m = diffusion(2, N, theta);
    m.drift[0] = TrigField::sine(2, {0, 1, 0});
    return m;
}

/// ABC flow with identity noise frame; Theta plays the role of magnetic diffusivity.
inline SdeModel abc(int N, double theta, double A, double B, double C)
{
    SdeModel m = diffusion(3, N, theta);
    m.drift = abc_flow(A, B, C);
    return m;
}

/// D = 1, F = 0, e = (1 + eps cos x) d/dx.
inline SdeModel multiplicative_1d(int N, double theta, double eps, double alpha = 0.5)
{
    SdeModel m;
    m.layout = BasisLayout(1, N);
    m.drift = FlowField(1);
    FlowField e(1);
    e[0] = TrigField::constant(1, 1.0) + TrigField::cosine(1, {1, 0, 0}, eps);
    m.noise = {e};
    m.theta = theta;
    m.alpha = alpha;
    return m;
}

/// Same model on a different truncation.
inline SdeModel with_truncation(SdeModel m, int N)
{
    m.layout = m.layout.with_truncation(N);
    return m;
}

}  // namespace sts::models
