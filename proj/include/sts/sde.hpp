#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "sts/assembly.hpp"
#include "sts/eigen.hpp"
#include "sts/parallel.hpp"

namespace sts {

using Point = std::array<double, 3>;

inline double wrap_angle(double x)
{
    x = std::fmod(x, two_pi);
    return x < 0.0 ? x + two_pi : x;
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Master seed plus a per-trajectory stream index.
struct RngSpec {
    std::uint64_t seed = 0;

    std::mt19937_64 stream(std::uint64_t index) const
    {
        return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
    }
};

// ---------------------------------------------------------------------------------------------
// Field evaluation by direct trigonometric summation

/// f(x) = sum a cos(k.x) + b sin(k.x), with +-k merged.
class FieldTerms {
public:
    FieldTerms() = default;
    explicit FieldTerms(const TrigField& f) : dim_(f.dimension())
    {
        for (const auto& [k, c] : f.coefficients()) {
            const WaveVector neg = -k;
            const bool canonical = !(neg < k);
            const WaveVector rep = canonical ? k : neg;
            const double s = canonical ? 1.0 : -1.0;
            Term* t = nullptr;
            for (auto& e : terms_)
                if (e.k == rep) t = &e;
            if (!t) {
                terms_.push_back({rep, 0.0, 0.0});
                t = &terms_.back();
            }
            t->a += c.real();
            t->b += -s * c.imag();
        }
    }

    double operator()(const Point& x) const
    {
        double v = 0.0;
        for (const auto& t : terms_) {
            const double ph = phase(t.k, x);
            v += t.a * std::cos(ph) + t.b * std::sin(ph);
        }
        return v;
    }
    /// Value and gradient.
    double eval(const Point& x, Point& grad) const
    {
        grad = {0.0, 0.0, 0.0};
        double v = 0.0;
        for (const auto& t : terms_) {
            const double ph = phase(t.k, x);
            const double c = std::cos(ph), s = std::sin(ph);
            v += t.a * c + t.b * s;
            const double dv = -t.a * s + t.b * c;
            for (int j = 0; j < dim_; ++j) grad[j] += t.k[j] * dv;
        }
        return v;
    }
    bool constant() const
    {
        for (const auto& t : terms_)
            if (t.k != WaveVector{0, 0, 0}) return false;
        return true;
    }

private:
    struct Term {
        WaveVector k;
        double a, b;
    };
    double phase(const WaveVector& k, const Point& x) const
    {
        double ph = 0.0;
        for (int j = 0; j < dim_; ++j) ph += k[j] * x[j];
        return ph;
    }
    int dim_ = 1;
    std::vector<Term> terms_;
};

/// Drift and noise frame compiled for fast pointwise evaluation.
struct CompiledSde {
    int dim = 1;
    double amp = 0.0;  ///< sqrt(2 Theta)
    std::vector<FieldTerms> drift;
    std::vector<std::vector<FieldTerms>> noise;  ///< noise[a][i]

    explicit CompiledSde(const SdeModel& m) : dim(m.dimension()), amp(std::sqrt(2.0 * m.theta))
    {
        m.validate();
        for (int i = 0; i < dim; ++i) drift.emplace_back(m.drift[i]);
        for (const auto& e : m.noise) {
            std::vector<FieldTerms> comps;
            for (int i = 0; i < dim; ++i) comps.emplace_back(e[i]);
            noise.push_back(std::move(comps));
        }
    }
    std::size_t noise_count() const { return noise.size(); }

    /// F(x) dt + amp e_a(x) dW^a
    Point increment(const Point& x, double dt, const std::vector<double>& dW) const
    {
        Point out{0.0, 0.0, 0.0};
        for (int i = 0; i < dim; ++i) {
            double v = drift[static_cast<std::size_t>(i)](x) * dt;
            for (std::size_t a = 0; a < noise.size(); ++a)
                v += amp * noise[a][static_cast<std::size_t>(i)](x) * dW[a];
            out[i] = v;
        }
        return out;
    }
    /// Jacobian of the increment, row i = d(incr_i)/dx.
    Eigen::Matrix3d increment_jacobian(const Point& x, double dt, const std::vector<double>& dW) const
    {
        Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
        Point g;
        for (int i = 0; i < dim; ++i) {
            drift[static_cast<std::size_t>(i)].eval(x, g);
            for (int j = 0; j < dim; ++j) J(i, j) += g[j] * dt;
            for (std::size_t a = 0; a < noise.size(); ++a) {
                noise[a][static_cast<std::size_t>(i)].eval(x, g);
                for (int j = 0; j < dim; ++j) J(i, j) += amp * g[j] * dW[a];
            }
        }
        return J;
    }
    double step_limit(const SdeModel& m) const
    {
        double g = 0.0;
        for (const auto& e : m.noise) g = std::max(g, e.gradient_bound());
        const double rate = m.drift.sup_bound() + m.theta * g;
        return rate > 0.0 ? 0.1 / rate : std::numeric_limits<double>::infinity();
    }
};

// ---------------------------------------------------------------------------------------------
// Integrators

enum class Scheme { stratonovich, ito };

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Point> states;  ///< wrapped to [0, 2 pi)^D
    Point displacement{0.0, 0.0, 0.0};  ///< unwrapped x(end) - x0
};

namespace detail {

inline void check_step(const SdeModel& m, const CompiledSde& c, double dt, long steps)
{
    require(dt > 0.0 && steps >= 0, ErrorKind::domain, "integrator needs dt > 0 and steps >= 0");
    require(dt <= c.step_limit(m) * (1.0 + 1e-12), ErrorKind::domain,
            "time step too large for this model (limit " + std::to_string(c.step_limit(m)) + ")");
}

inline void draw(std::mt19937_64& rng, std::normal_distribution<double>& nd, double sdt, std::vector<double>& dW)
{
    for (auto& w : dW) w = sdt * nd(rng);
}

/// One step; x is unwrapped, the caller wraps.
inline void advance(const CompiledSde& c, Scheme s, Point& x, double dt, const std::vector<double>& dW)
{
    const Point a = c.increment(x, dt, dW);
    if (s == Scheme::ito) {
        for (int i = 0; i < c.dim; ++i) x[i] += a[i];
        return;
    }
    Point xt = x;
    for (int i = 0; i < c.dim; ++i) xt[i] += a[i];
    const Point b = c.increment(xt, dt, dW);
    for (int i = 0; i < c.dim; ++i) x[i] += 0.5 * (a[i] + b[i]);
}

inline void check_finite(const Point& x, int dim, long step)
{
    for (int i = 0; i < dim; ++i)
        require(std::isfinite(x[i]), ErrorKind::numerical,
                "non-finite state, integration aborted at step " + std::to_string(step));
}

}  // namespace detail

inline Trajectory integrate(const SdeModel& m, Point x0, double dt, long steps, std::mt19937_64& rng, Scheme s,
                            long record_every = 1)
{
    const CompiledSde c(m);
    detail::check_step(m, c, dt, steps);
    require(record_every >= 1, ErrorKind::domain, "record interval must be positive");
    Trajectory tr;
    tr.dt = dt;
    std::normal_distribution<double> nd;
    std::vector<double> dW(c.noise_count());
    Point x = x0, origin = x0;
    tr.times.push_back(0.0);
    Point w = x0;
    for (int i = 0; i < c.dim; ++i) w[i] = wrap_angle(w[i]);
    tr.states.push_back(w);
    for (long n = 1; n <= steps; ++n) {
        detail::draw(rng, nd, std::sqrt(dt), dW);
        detail::advance(c, s, x, dt, dW);
        detail::check_finite(x, c.dim, n);
        if (n % record_every == 0 || n == steps) {
            for (int i = 0; i < c.dim; ++i) w[i] = wrap_angle(x[i]);
            tr.times.push_back(n * dt);
            tr.states.push_back(w);
        }
    }
    for (int i = 0; i < c.dim; ++i) tr.displacement[i] = x[i] - origin[i];
    return tr;
}

/// Heun predictor-corrector.
inline Trajectory integrate_stratonovich(const SdeModel& m, Point x0, double dt, long steps, std::mt19937_64& rng,
                                         long record_every = 1)
{
    return integrate(m, x0, dt, steps, rng, Scheme::stratonovich, record_every);
}

/// Euler-Maruyama.
inline Trajectory integrate_ito(const SdeModel& m, Point x0, double dt, long steps, std::mt19937_64& rng,
                                long record_every = 1)
{
    return integrate(m, x0, dt, steps, rng, Scheme::ito, record_every);
}

/// Initial condition: a fixed point, or uniform on the torus when `uniform` is set.
struct InitialCondition {
    Point x0{0.0, 0.0, 0.0};
    bool uniform = false;
};

/// Final states of `count` independent trajectories; trajectory i uses stream i of `rng`.
inline std::vector<Point> ensemble_states(const SdeModel& m, const InitialCondition& init, double dt, long steps,
                                          std::size_t count, const RngSpec& rng, Scheme s)
{
    const CompiledSde c(m);
    detail::check_step(m, c, dt, steps);
    std::vector<Point> out(count);
    parallel_for(count, [&](std::size_t i) {
        auto gen = rng.stream(i);
        Point x = init.x0;
        if (init.uniform) {
            std::uniform_real_distribution<double> u(0.0, two_pi);
            for (int j = 0; j < c.dim; ++j) x[j] = u(gen);
        }
        std::normal_distribution<double> nd;
        std::vector<double> dW(c.noise_count());
        const double sdt = std::sqrt(dt);
        for (long n = 1; n <= steps; ++n) {
            detail::draw(gen, nd, sdt, dW);
            detail::advance(c, s, x, dt, dW);
            if (n % 64 == 0) {
                detail::check_finite(x, c.dim, n);
                for (int j = 0; j < c.dim; ++j) x[j] = wrap_angle(x[j]);
            }
        }
        detail::check_finite(x, c.dim, steps);
        for (int j = 0; j < c.dim; ++j) x[j] = wrap_angle(x[j]);
        out[i] = x;
    });
    return out;
}

// ---------------------------------------------------------------------------------------------
// Densities

/// Normalized histogram on a regular grid, bins per axis; cell c = sum_j b_j bins^j.
struct EnsembleDensity {
    int dimension = 1;
    int bins = 64;
    std::size_t samples = 0;
    std::vector<double> density;

    double cell_volume() const { return std::pow(two_pi / bins, dimension); }
    double total() const
    {
        double s = 0.0;
        for (double v : density) s += v;
        return s * cell_volume();
    }
};

inline int default_bins(int D) { return D == 1 ? 64 : 32; }

inline EnsembleDensity ensemble_density(const std::vector<Point>& states, int D, int bins = 0)
{
    if (bins <= 0) bins = default_bins(D);
    require(!states.empty(), ErrorKind::domain, "ensemble_density: empty ensemble");
    require(D >= 1 && D <= max_dimension, ErrorKind::domain, "ensemble_density: bad dimension");
    EnsembleDensity e;
    e.dimension = D;
    e.bins = bins;
    e.samples = states.size();
    std::size_t cells = 1;
    for (int j = 0; j < D; ++j) cells *= static_cast<std::size_t>(bins);
    std::vector<double> counts(cells, 0.0);
    const double h = two_pi / bins;
    for (const auto& x : states) {
        std::size_t c = 0, stride = 1;
        for (int j = 0; j < D; ++j) {
            int b = static_cast<int>(wrap_angle(x[j]) / h);
            b = std::clamp(b, 0, bins - 1);
            c += static_cast<std::size_t>(b) * stride;
            stride *= static_cast<std::size_t>(bins);
        }
        counts[c] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(states.size()) * e.cell_volume());
    e.density.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) e.density[c] = counts[c] * norm;
    return e;
}

/// Exact bin averages of a (real part of a) trigonometric density on the same grid.
inline std::vector<double> bin_averages(const TrigField& rho, int bins)
{
    const int D = rho.dimension();
    const double h = two_pi / bins;
    std::size_t cells = 1;
    for (int j = 0; j < D; ++j) cells *= static_cast<std::size_t>(bins);
    std::vector<double> out(cells, 0.0);
    for (const auto& [k, c] : rho.coefficients()) {
        double sinc = 1.0;
        for (int j = 0; j < D; ++j)
            if (k[j] != 0) sinc *= std::sin(0.5 * k[j] * h) / (0.5 * k[j] * h);
        for (std::size_t cell = 0; cell < cells; ++cell) {
            std::size_t r = cell;
            double ph = 0.0;
            for (int j = 0; j < D; ++j) {
                ph += k[j] * (static_cast<double>(r % static_cast<std::size_t>(bins)) + 0.5) * h;
                r /= static_cast<std::size_t>(bins);
            }
            out[cell] += sinc * (c * std::exp(cd(0.0, ph))).real();
        }
    }
    return out;
}

/// Bin averages of the density of a top-degree form.
inline std::vector<double> bin_averages(const FormVector& top, int bins)
{
    require(top.degree == top.layout.dimension(), ErrorKind::degree, "density needs a top-degree form");
    return bin_averages(top.component(top.layout.full_index()), bins);
}

/// L1 distance int |p - q| between a histogram and bin averages on its grid.
inline double l1_distance(const EnsembleDensity& e, const std::vector<double>& q)
{
    require(q.size() == e.density.size(), ErrorKind::domain, "l1_distance: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += std::abs(e.density[i] - q[i]);
    return s * e.cell_volume();
}

inline double l1_distance(const EnsembleDensity& a, const EnsembleDensity& b)
{
    require(a.bins == b.bins && a.dimension == b.dimension, ErrorKind::domain, "l1_distance: grid mismatch");
    return l1_distance(a, b.density);
}

/// exp(-t H) psi0 for a top-degree block, through the eigensystem of H.
inline FormVector operator_evolve_density(const EigenSystem& es, const OperatorBlock& H, const FormVector& psi0,
                                          double t)
{
    require(t >= 0.0, ErrorKind::domain, "operator_evolve_density needs t >= 0");
    require(psi0.degree == H.source && psi0.degree == psi0.layout.dimension(), ErrorKind::degree,
            "operator_evolve_density needs a top-degree form matching the block");
    if (t == 0.0) return psi0;
    DenseVector out;
    if (es.has_vectors() && !es.near_defective) {
        DenseVector c = es.left * psi0.coeffs;
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(-es.values[i] * t);
        out = es.right * c;
    } else {
        const DenseMatrix e = (DenseMatrix(-t * H.dense())).exp();
        out = e * psi0.coeffs;
    }
    FormVector r(psi0.layout, psi0.degree, std::move(out));
    const cd before = integrate_top(psi0), after = integrate_top(r);
    require(std::abs(after - before) <= 1e-10 * std::max(1.0, std::abs(before)), ErrorKind::numerical,
            "operator evolution does not conserve probability");
    return r;
}

inline FormVector operator_evolve_density(const OperatorBlock& H, const FormVector& psi0, double t)
{
    return operator_evolve_density(eigensolve(H), H, psi0, t);
}

/// Zero mode of a top-degree block, normalized to unit total probability.
inline FormVector stationary_density(const OperatorBlock& H)
{
    const EigenSystem es = eigensolve(H);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.size(); ++i)
        if (std::abs(es.values[i]) < std::abs(es.values[best])) best = i;
    FormVector psi = es.right_form(best);
    const cd mass = integrate_top(psi);
    require(std::abs(mass) > 1e-12, ErrorKind::numerical, "zero mode carries no probability");
    psi.coeffs /= mass;
    return psi;
}

/// Density (1/(2pi)^D) dx^1..dx^D on the layout.
inline FormVector uniform_density(const BasisLayout& l)
{
    FormVector psi(l, l.dimension());
    psi.at(l.full_index(), {0, 0, 0}) = 1.0 / std::pow(two_pi, l.dimension());
    return psi;
}

// ---------------------------------------------------------------------------------------------
// Lyapunov exponents

/// Tangent dynamics propagated with the same Heun / Euler scheme; QR every `qr_interval` steps.
inline std::vector<double> lyapunov(const SdeModel& m, Point x0, double dt, long steps, std::mt19937_64& rng,
                                    int n_exponents, int qr_interval = 10, Scheme s = Scheme::stratonovich)
{
    const CompiledSde c(m);
    detail::check_step(m, c, dt, steps);
    const int D = c.dim;
    require(n_exponents >= 1 && n_exponents <= D, ErrorKind::domain, "lyapunov: 1 <= n_exponents <= D");
    require(steps > 0 && qr_interval >= 1, ErrorKind::domain, "lyapunov: need steps > 0");
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(D, n_exponents);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_exponents);
    std::normal_distribution<double> nd;
    std::vector<double> dW(c.noise_count());
    Point x = x0;
    auto reorthonormalize = [&](long step) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(T);
        const Eigen::MatrixXd R = qr.matrixQR().topRows(n_exponents).triangularView<Eigen::Upper>();
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(D, n_exponents);
        for (int i = 0; i < n_exponents; ++i) {
            const double r = R(i, i);
            require(std::isfinite(r) && r != 0.0, ErrorKind::numerical,
                    "degenerate tangent matrix at step " + std::to_string(step));
            acc[i] += std::log(std::abs(r));
            if (r < 0.0) Q.col(i) *= -1.0;
        }
        T = Q;
    };
    for (long n = 1; n <= steps; ++n) {
        detail::draw(rng, nd, std::sqrt(dt), dW);
        const Eigen::MatrixXd J0 = c.increment_jacobian(x, dt, dW).topLeftCorner(D, D);
        if (s == Scheme::ito) {
            T += J0 * T;
            detail::advance(c, s, x, dt, dW);
        } else {
            const Point a = c.increment(x, dt, dW);
            Point xt = x;
            for (int i = 0; i < D; ++i) xt[i] += a[i];
            const Eigen::MatrixXd Tt = T + J0 * T;
            const Eigen::MatrixXd J1 = c.increment_jacobian(xt, dt, dW).topLeftCorner(D, D);
            const Point b = c.increment(xt, dt, dW);
            T += 0.5 * (J0 * T + J1 * Tt);
            for (int i = 0; i < D; ++i) x[i] += 0.5 * (a[i] + b[i]);
        }
        detail::check_finite(x, D, n);
        if (n % qr_interval == 0 || n == steps) reorthonormalize(n);
    }
    std::vector<double> out(static_cast<std::size_t>(n_exponents));
    for (int i = 0; i < n_exponents; ++i) out[static_cast<std::size_t>(i)] = acc[i] / (steps * dt);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Monte-Carlo observables

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct McOptions {
    std::size_t trajectories = 200;  ///< each trajectory is one batch
    double dt = 0.01;
    double burn_in = 10.0;
    double duration = 100.0;  ///< sampled time after burn-in
    long sample_every = 1;
    Scheme scheme = Scheme::stratonovich;
    InitialCondition init{{0.0, 0.0, 0.0}, true};
};

namespace detail {

inline McEstimate batch_stats(const std::vector<double>& b)
{
    McEstimate e;
    const double n = static_cast<double>(b.size());
    for (double v : b) e.mean += v;
    e.mean /= n;
    double var = 0.0;
    for (double v : b) var += (v - e.mean) * (v - e.mean);
    e.stderr_ = b.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    return e;
}

/// Runs each trajectory through burn-in and hands the sampled states to `sink(i, samples)`.
template <class Sink>
void sample_paths(const SdeModel& m, const McOptions& o, const RngSpec& rng, Sink&& sink)
{
    const CompiledSde c(m);
    const long burn = static_cast<long>(std::llround(o.burn_in / o.dt));
    const long steps = static_cast<long>(std::llround(o.duration / o.dt));
    check_step(m, c, o.dt, burn + steps);
    require(o.trajectories >= 2 && steps >= 1 && o.sample_every >= 1, ErrorKind::domain,
            "Monte-Carlo run needs >= 2 trajectories and a positive duration");
    parallel_for(o.trajectories, [&](std::size_t i) {
        auto gen = rng.stream(i);
        Point x = o.init.x0;
        if (o.init.uniform) {
            std::uniform_real_distribution<double> u(0.0, two_pi);
            for (int j = 0; j < c.dim; ++j) x[j] = u(gen);
        }
        std::normal_distribution<double> nd;
        std::vector<double> dW(c.noise_count());
        const double sdt = std::sqrt(o.dt);
        std::vector<Point> samples;
        samples.reserve(static_cast<std::size_t>(steps / o.sample_every + 1));
        for (long n = 1; n <= burn + steps; ++n) {
            draw(gen, nd, sdt, dW);
            advance(c, o.scheme, x, o.dt, dW);
            if (n % 64 == 0) {
                check_finite(x, c.dim, n);
                for (int j = 0; j < c.dim; ++j) x[j] = wrap_angle(x[j]);
            }
            if (n > burn && (n - burn) % o.sample_every == 0) samples.push_back(x);
        }
        sink(i, samples);
    });
}

}  // namespace detail

/// Time-and-ensemble average of f after burn-in; batch means over trajectories.
inline McEstimate mc_expectation(const SdeModel& m, const TrigField& f, const McOptions& o, const RngSpec& rng)
{
    const FieldTerms ft(f);
    std::vector<double> batch(o.trajectories);
    detail::sample_paths(m, o, rng, [&](std::size_t i, const std::vector<Point>& xs) {
        double s = 0.0;
        for (const auto& x : xs) s += ft(x);
        batch[i] = s / static_cast<double>(xs.size());
    });
    return detail::batch_stats(batch);
}

struct McAutocorrelation {
    McEstimate mean;
    std::vector<double> lags;
    std::vector<McEstimate> raw;        ///< <f(x_t) f(x_{t+lag})>
    std::vector<McEstimate> connected;  ///< raw - mean^2
};

/// Stationary autocorrelation of f at the given lags (rounded to multiples of dt * sample_every).
inline McAutocorrelation mc_autocorrelation(const SdeModel& m, const TrigField& f, const std::vector<double>& lags,
                                            const McOptions& o, const RngSpec& rng)
{
    const FieldTerms ft(f);
    const double h = o.dt * static_cast<double>(o.sample_every);
    std::vector<long> shift;
    for (double l : lags) {
        require(l >= 0.0 && l < o.duration, ErrorKind::domain, "autocorrelation lag outside the sampled window");
        shift.push_back(std::lround(l / h));
    }
    const std::size_t nl = lags.size();
    std::vector<double> means(o.trajectories);
    std::vector<std::vector<double>> raw(nl, std::vector<double>(o.trajectories));
    detail::sample_paths(m, o, rng, [&](std::size_t i, const std::vector<Point>& xs) {
        std::vector<double> v(xs.size());
        for (std::size_t n = 0; n < xs.size(); ++n) v[n] = ft(xs[n]);
        double s = 0.0;
        for (double a : v) s += a;
        means[i] = s / static_cast<double>(v.size());
        for (std::size_t l = 0; l < nl; ++l) {
            const std::size_t sh = static_cast<std::size_t>(shift[l]);
            double acc = 0.0;
            for (std::size_t n = 0; n + sh < v.size(); ++n) acc += v[n] * v[n + sh];
            raw[l][i] = acc / static_cast<double>(v.size() - sh);
        }
    });
    McAutocorrelation out;
    out.mean = detail::batch_stats(means);
    for (std::size_t l = 0; l < nl; ++l) {
        out.lags.push_back(static_cast<double>(shift[l]) * h);
        out.raw.push_back(detail::batch_stats(raw[l]));
        // per-batch connected value keeps the batch error honest
        std::vector<double> conn(o.trajectories);
        for (std::size_t i = 0; i < o.trajectories; ++i) conn[i] = raw[l][i] - means[i] * means[i];
        out.connected.push_back(detail::batch_stats(conn));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Induction-equation time stepping

struct InductionResult {
    double gamma = 0.0;       ///< growth rate, = -Re E of the dominant mode
    double omega = 0.0;       ///< |Im E| of the dominant mode
    double norm_slope = 0.0;  ///< least-squares slope of log |B| over the fit window (diagnostic)
    std::vector<double> times;
    std::vector<double> log_norm;
};

namespace detail {

/// Dominant root of a multi-channel linear-prediction fit of order p.
inline cd dominant_lp_root(const std::vector<DenseVector>& samples, int p)
{
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index ch = samples.front().size();
    require(n > 3 * p, ErrorKind::numerical, "linear-prediction fit needs more samples");
    DenseMatrix A((n - p) * ch, p);
    DenseVector b((n - p) * ch);
    Eigen::Index r = 0;
    for (Eigen::Index t = p; t < n; ++t)
        for (Eigen::Index c = 0; c < ch; ++c, ++r) {
            for (int j = 0; j < p; ++j) A(r, j) = samples[static_cast<std::size_t>(t - 1 - j)][c];
            b[r] = samples[static_cast<std::size_t>(t)][c];
        }
    const DenseVector a = A.completeOrthogonalDecomposition().solve(b);
    DenseMatrix comp = DenseMatrix::Zero(p, p);
    comp.row(0) = a.transpose();
    for (int j = 1; j < p; ++j) comp(j, j - 1) = 1.0;
    Eigen::ComplexEigenSolver<DenseMatrix> es(comp, false);
    cd best = es.eigenvalues()[0];
    for (Eigen::Index j = 1; j < p; ++j)
        if (std::abs(es.eigenvalues()[j]) > std::abs(best)) best = es.eigenvalues()[j];
    return best;
}

}  // namespace detail

/// Integrating-factor RK4 for d_t B = -(L_v + eta Delta_H) B on 2-forms: diffusion exactly,
/// advection with RK4.  The dominant mode is read off a linear-prediction fit over the second half.
inline InductionResult induction_timestep_oracle(const FlowField& v, double eta, const FormVector& B0, double dt,
                                                 long steps, long sample_every = 10, int lp_order = 4)
{
    const BasisLayout& l = B0.layout;
    require(l.dimension() == 3 && B0.degree == 2, ErrorKind::degree, "induction oracle evolves 2-forms on T^3");
    require(dt > 0.0 && steps >= 8 * sample_every, ErrorKind::domain, "induction oracle needs dt > 0 and enough steps");
    const SparseMatrix adv = lie_matrix(v, l, 2).matrix;
    const SparseMatrix lap = hodge_laplacian_blocks(l)[2].matrix;
    DenseVector diag = DenseVector::Zero(static_cast<Eigen::Index>(l.size(2)));
    for (int o = 0; o < lap.outerSize(); ++o)
        for (SparseMatrix::InnerIterator it(lap, o); it; ++it) {
            require(it.row() == it.col() || std::abs(it.value()) < 1e-14, ErrorKind::numerical,
                    "Hodge Laplacian is not diagonal in the Fourier basis");
            if (it.row() == it.col()) diag[it.row()] = eta * it.value();
        }
    const DenseVector Eh = (-dt * diag).array().exp(), Eh2 = (-0.5 * dt * diag).array().exp();
    // growth faster than this bound can only come from the integrator
    double col = 0.0, row = 0.0;
    {
        Eigen::VectorXd cs = Eigen::VectorXd::Zero(adv.cols()), rs = Eigen::VectorXd::Zero(adv.rows());
        for (int o = 0; o < adv.outerSize(); ++o)
            for (SparseMatrix::InnerIterator it(adv, o); it; ++it) {
                cs[it.col()] += std::abs(it.value());
                rs[it.row()] += std::abs(it.value());
            }
        col = cs.maxCoeff();
        row = rs.maxCoeff();
    }
    const double rate_bound = 1.01 * std::sqrt(col * row) + 1e-12;

    std::mt19937_64 gen(0x1d0c7);
    std::normal_distribution<double> nd;
    DenseMatrix probes(4, B0.coeffs.size());
    for (Eigen::Index i = 0; i < probes.size(); ++i) probes.data()[i] = cd(nd(gen), nd(gen));

    InductionResult res;
    std::vector<DenseVector> samples;
    DenseVector B = B0.coeffs;
    double log_scale = 0.0;
    auto N = [&](const DenseVector& x) -> DenseVector { return -(adv * x); };
    double prev = B.norm();
    require(prev > 0.0, ErrorKind::domain, "induction oracle needs a nonzero initial field");
    for (long n = 0; n <= steps; ++n) {
        if (n > 0) {
            const DenseVector k1 = N(B);
            const DenseVector k2 = N(Eh2.cwiseProduct(B + 0.5 * dt * k1));
            const DenseVector k3 = N(Eh2.cwiseProduct(B) + 0.5 * dt * k2);
            const DenseVector k4 = N(Eh.cwiseProduct(B) + dt * Eh2.cwiseProduct(k3));
            B = Eh.cwiseProduct(B) + (dt / 6.0) * (Eh.cwiseProduct(k1) + 2.0 * Eh2.cwiseProduct(k2 + k3) + k4);
            const double nb = B.norm();
            require(std::isfinite(nb), ErrorKind::numerical,
                    "induction time stepping produced non-finite values at step " + std::to_string(n));
            require(nb <= prev * std::exp(rate_bound * dt), ErrorKind::numerical,
                    "induction time stepping unstable (growth beyond the advection bound) at step " +
                        std::to_string(n));
            prev = nb;
            if (nb > 1e100 || nb < 1e-100) {
                // rescale; the stored samples of the fit window must share one scale
                B /= nb;
                log_scale += std::log(nb);
                prev = 1.0;
                for (auto& s : samples) s /= nb;
            }
        }
        if (n % sample_every == 0) {
            res.times.push_back(n * dt);
            res.log_norm.push_back(std::log(B.norm()) + log_scale);
            if (2 * n >= steps) samples.push_back(probes * B);
        }
    }
    const cd z = detail::dominant_lp_root(samples, lp_order);
    const double h = dt * static_cast<double>(sample_every);
    res.gamma = std::log(std::abs(z)) / h;
    res.omega = std::abs(std::arg(z)) / h;
    std::vector<double> tx, ty;
    for (std::size_t i = res.times.size() / 2; i < res.times.size(); ++i) {
        tx.push_back(res.times[i]);
        ty.push_back(res.log_norm[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        mx += tx[i];
        my += ty[i];
    }
    mx /= static_cast<double>(tx.size());
    my /= static_cast<double>(tx.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        sxy += (tx[i] - mx) * (ty[i] - my);
        sxx += (tx[i] - mx) * (tx[i] - mx);
    }
    res.norm_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return res;
}

/// B0 = dA0 for a random real 1-form A0 supported on 1 <= |k|_inf <= band (no k = 0 mode).
inline FormVector random_exact_two_form(const BasisLayout& l, int band, std::uint64_t seed)
{
    require(l.dimension() == 3, ErrorKind::domain, "random_exact_two_form is for T^3");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<TrigField> comps;
    for (int i = 0; i < 3; ++i) {
        TrigField f(3);
        for (int a = -band; a <= band; ++a)
            for (int b = -band; b <= band; ++b)
                for (int c = -band; c <= band; ++c) {
                    const WaveVector k{a, b, c};
                    if (!(WaveVector{0, 0, 0} < k)) continue;
                    const cd z(nd(gen), nd(gen));
                    f.add(k, z);
                    f.add(-k, std::conj(z));
                }
        comps.push_back(f);
    }
    const FormVector A = form_from_components(l, 1, comps);
    return FormVector(l, 2, d_matrix(l, 1).matrix * A.coeffs);
}

}  // namespace sts
