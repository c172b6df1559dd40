#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sts/forms.hpp"
#include "sts/trig_field.hpp"

namespace sts::testing {

/// Random real trigonometric polynomial with all modes of bandwidth <= band.
inline TrigField random_field(int D, int band, std::mt19937_64& gen, double amp = 1.0)
{
    std::uniform_real_distribution<double> u(-amp, amp);
    TrigField f(D);
    BasisLayout box(D, band);
    for (std::size_t c = 0; c < box.cells(); ++c) {
        const std::size_t nc = box.negated_cell(c);
        if (c > nc) continue;
        const WaveVector k = box.wave_vector(c);
        if (c == nc) {
            f.add(k, u(gen));
        } else {
            const cd v(u(gen), u(gen));
            f.add(k, v);
            f.add(-k, std::conj(v));
        }
    }
    return f;
}

inline FlowField random_flow(int D, int band, std::mt19937_64& gen, double amp = 1.0)
{
    std::vector<TrigField> comps;
    for (int i = 0; i < D; ++i) comps.push_back(random_field(D, band, gen, amp));
    return FlowField(std::move(comps));
}

/// Random complex form whose coefficients vanish outside the box of radius band.
inline FormVector random_form(const BasisLayout& l, int k, int band, std::mt19937_64& gen)
{
    std::normal_distribution<double> nd;
    FormVector f(l, k);
    for (std::size_t m = 0; m < l.multi_indices(k).size(); ++m)
        for (std::size_t c = 0; c < l.cells(); ++c)
            if (bandwidth_of(l.wave_vector(c)) <= band) f.coeffs[l.index(m, c)] = cd(nd(gen), nd(gen));
    return f;
}

/// Complex (not necessarily real) trigonometric sum evaluated at x.
inline cd eval_component(const FormVector& f, std::size_t m, const std::vector<double>& x)
{
    const BasisLayout& l = f.layout;
    cd s = 0.0;
    for (std::size_t c = 0; c < l.cells(); ++c) {
        const cd v = f.coeffs[l.index(m, c)];
        if (v == cd(0.0)) continue;
        const WaveVector k = l.wave_vector(c);
        double ph = 0.0;
        for (int j = 0; j < l.dimension(); ++j) ph += k[j] * x[j];
        s += v * std::exp(cd(0.0, ph));
    }
    return s;
}

/// Points of the uniform grid with `n` nodes per axis on [0, 2 pi)^D.
inline std::vector<std::vector<double>> grid_points(int D, int n)
{
    std::vector<std::vector<double>> pts;
    std::size_t total = 1;
    for (int j = 0; j < D; ++j) total *= static_cast<std::size_t>(n);
    for (std::size_t p = 0; p < total; ++p) {
        std::vector<double> x(static_cast<std::size_t>(D));
        std::size_t r = p;
        for (int j = D - 1; j >= 0; --j) {
            x[static_cast<std::size_t>(j)] = two_pi * static_cast<double>(r % n) / n;
            r /= n;
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace sts::testing
