#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sts/core.hpp"
#include "sts/layout.hpp"

namespace sts {

/// Real trigonometric polynomial on T^D, f(x) = sum_k c_k e^{i k.x} with c_{-k} = conj(c_k).
class TrigField {
public:
    using Coefficients = std::map<WaveVector, cd>;

    explicit TrigField(int dimension = 1) : dim_(dimension)
    {
        require(dimension >= 1 && dimension <= max_dimension, ErrorKind::domain,
                "trig field dimension must be 1, 2 or 3");
    }

    static TrigField constant(int dimension, double value)
    {
        TrigField f(dimension);
        f.add({0, 0, 0}, value);
        return f;
    }
    /// amplitude * cos(k.x)
    static TrigField cosine(int dimension, const WaveVector& k, double amplitude = 1.0)
    {
        TrigField f(dimension);
        if (k == WaveVector{0, 0, 0}) {
            f.add(k, amplitude);
            return f;
        }
        f.add(k, 0.5 * amplitude);
        f.add(-k, 0.5 * amplitude);
        return f;
    }
    /// amplitude * sin(k.x)
    static TrigField sine(int dimension, const WaveVector& k, double amplitude = 1.0)
    {
        TrigField f(dimension);
        if (k == WaveVector{0, 0, 0}) return f;
        f.add(k, cd(0.0, -0.5 * amplitude));
        f.add(-k, cd(0.0, 0.5 * amplitude));
        return f;
    }

    int dimension() const { return dim_; }
    const Coefficients& coefficients() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }

    /// Adds c to the coefficient of e^{i k.x}; exact zeros are pruned.
    void add(const WaveVector& k, cd c)
    {
        for (int j = dim_; j < max_dimension; ++j)
            require(k[j] == 0, ErrorKind::domain, "wavevector component beyond field dimension");
        auto [it, inserted] = coeffs_.try_emplace(k, c);
        if (!inserted) it->second += c;
        if (it->second == cd(0.0, 0.0)) coeffs_.erase(it);
    }

    cd coefficient(const WaveVector& k) const
    {
        auto it = coeffs_.find(k);
        return it == coeffs_.end() ? cd(0.0, 0.0) : it->second;
    }

    int bandwidth() const
    {
        int b = 0;
        for (const auto& [k, c] : coeffs_) b = std::max(b, bandwidth_of(k));
        return b;
    }

    /// Largest deviation from the reality condition c_{-k} = conj(c_k).
    double reality_defect() const
    {
        double worst = 0.0;
        for (const auto& [k, c] : coeffs_) worst = std::max(worst, std::abs(coefficient(-k) - std::conj(c)));
        return worst;
    }
    bool is_real(double tol = 1e-12) const { return reality_defect() <= tol * (1.0 + max_abs()); }

    double max_abs() const
    {
        double m = 0.0;
        for (const auto& [k, c] : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }
    /// Upper bound of sup |f| (sum of coefficient magnitudes).
    double sup_bound() const
    {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) s += std::abs(c);
        return s;
    }

    double operator()(std::span<const double> x) const
    {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) {
            double phase = 0.0;
            for (int j = 0; j < dim_; ++j) phase += k[j] * x[j];
            s += c.real() * std::cos(phase) - c.imag() * std::sin(phase);
        }
        return s;
    }

    TrigField& operator+=(const TrigField& o)
    {
        require(o.dim_ == dim_, ErrorKind::domain, "trig field dimension mismatch");
        for (const auto& [k, c] : o.coeffs_) add(k, c);
        return *this;
    }
    TrigField& operator*=(double s)
    {
        for (auto& [k, c] : coeffs_) c *= s;
        if (s == 0.0) coeffs_.clear();
        return *this;
    }
    friend TrigField operator+(TrigField a, const TrigField& b) { return a += b; }
    friend TrigField operator*(double s, TrigField a) { return a *= s; }
    friend TrigField operator-(TrigField a, const TrigField& b) { return a += (-1.0) * b; }

    /// Coefficient-wise comparison.
    double distance(const TrigField& o) const
    {
        double d = 0.0;
        for (const auto& [k, c] : coeffs_) d = std::max(d, std::abs(c - o.coefficient(k)));
        for (const auto& [k, c] : o.coeffs_) d = std::max(d, std::abs(c - coefficient(k)));
        return d;
    }

private:
    int dim_;
    Coefficients coeffs_;
};

/// Exact partial derivative d f / d x^{axis+1}.
inline TrigField trig_diff(const TrigField& f, int axis)
{
    require(axis >= 0 && axis < f.dimension(), ErrorKind::domain, "derivative axis out of range");
    TrigField out(f.dimension());
    for (const auto& [k, c] : f.coefficients())
        if (k[axis] != 0) out.add(k, cd(0.0, k[axis]) * c);
    return out;
}

/// Exact product; the result bandwidth is at most the sum of the input bandwidths.
inline TrigField trig_mul(const TrigField& f, const TrigField& g)
{
    require(f.dimension() == g.dimension(), ErrorKind::domain, "trig field dimension mismatch");
    TrigField out(f.dimension());
    for (const auto& [kf, cf] : f.coefficients())
        for (const auto& [kg, cg] : g.coefficients()) out.add(kf + kg, cf * cg);
    return out;
}

/// Vector field with D trigonometric components; also used for noise vectors e_a.
class FlowField {
public:
    explicit FlowField(int dimension = 1) : components_(dimension, TrigField(dimension)) {}
    explicit FlowField(std::vector<TrigField> components) : components_(std::move(components))
    {
        require(!components_.empty() && static_cast<int>(components_.size()) <= max_dimension,
                ErrorKind::domain, "flow field needs 1..3 components");
        for (const auto& c : components_)
            require(c.dimension() == dimension(), ErrorKind::domain,
                    "flow component dimension must equal the number of components");
    }

    /// Constant unit vector along `axis`.
    static FlowField unit(int dimension, int axis, double scale = 1.0)
    {
        FlowField v(dimension);
        v[axis] = TrigField::constant(dimension, scale);
        return v;
    }

    int dimension() const { return static_cast<int>(components_.size()); }
    TrigField& operator[](int i) { return components_.at(i); }
    const TrigField& operator[](int i) const { return components_.at(i); }
    const std::vector<TrigField>& components() const { return components_; }

    int bandwidth() const
    {
        int b = 0;
        for (const auto& c : components_) b = std::max(b, c.bandwidth());
        return b;
    }
    bool is_real(double tol = 1e-12) const
    {
        for (const auto& c : components_)
            if (!c.is_real(tol)) return false;
        return true;
    }
    bool is_constant() const
    {
        for (const auto& c : components_)
            for (const auto& [k, v] : c.coefficients())
                if (k != WaveVector{0, 0, 0}) return false;
        return true;
    }
    double sup_bound() const
    {
        double s = 0.0;
        for (const auto& c : components_) s += c.sup_bound() * c.sup_bound();
        return std::sqrt(s);
    }
    /// Bound on the norm of the Jacobian.
    double gradient_bound() const
    {
        double s = 0.0;
        for (const auto& c : components_)
            for (const auto& [k, v] : c.coefficients()) s += std::abs(v) * std::sqrt(double(wave_norm_sq(k)));
        return s;
    }
    double distance(const FlowField& o) const
    {
        require(o.dimension() == dimension(), ErrorKind::domain, "flow dimension mismatch");
        double d = 0.0;
        for (int i = 0; i < dimension(); ++i) d = std::max(d, components_[i].distance(o.components_[i]));
        return d;
    }

    FlowField& operator+=(const FlowField& o)
    {
        require(o.dimension() == dimension(), ErrorKind::domain, "flow dimension mismatch");
        for (int i = 0; i < dimension(); ++i) components_[i] += o.components_[i];
        return *this;
    }
    friend FlowField operator*(double s, FlowField v)
    {
        for (auto& c : v.components_) c *= s;
        return v;
    }

private:
    std::vector<TrigField> components_;
};

/// F = -grad U
inline FlowField gradient_flow(const TrigField& potential)
{
    std::vector<TrigField> comps;
    for (int j = 0; j < potential.dimension(); ++j) comps.push_back(-1.0 * trig_diff(potential, j));
    return FlowField(std::move(comps));
}

/// Identity noise frame e_a^i = delta_a^i.
inline std::vector<FlowField> identity_frame(int dimension)
{
    std::vector<FlowField> frame;
    for (int a = 0; a < dimension; ++a) frame.push_back(FlowField::unit(dimension, a));
    return frame;
}

/// ABC flow (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x) on T^3.
inline FlowField abc_flow(double A, double B, double C)
{
    FlowField v(3);
    const WaveVector ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
    v[0] = TrigField::sine(3, ez, A) + TrigField::cosine(3, ey, C);
    v[1] = TrigField::sine(3, ex, B) + TrigField::cosine(3, ez, A);
    v[2] = TrigField::sine(3, ey, C) + TrigField::cosine(3, ex, B);
    return v;
}

}  // namespace sts
