#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sts/assembly.hpp"
#include "sts/eigen.hpp"

namespace sts {

struct Tolerances {
    double tol_zero = 1e-8;      ///< relative to the spectral radius
    double tol_pair = 1e-6;
    double tol_converge = 1e-4;  ///< relative eigenvalue drift under N -> N+2

    void validate() const
    {
        require(tol_zero > 0 && tol_pair > 0 && tol_converge > 0, ErrorKind::config, "tolerances must be positive");
    }
};

using Spectrum = std::vector<DenseVector>;  ///< eigenvalues per degree

inline Spectrum values_of(const std::vector<EigenSystem>& es)
{
    Spectrum s;
    for (const auto& e : es) s.push_back(e.values);
    return s;
}

inline double spectral_radius(const DenseVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline double spectral_radius(const Spectrum& s)
{
    double r = 0.0;
    for (const auto& v : s) r = std::max(r, spectral_radius(v));
    return r;
}

/// Relative eigenvalue distance used for matching: |a - b| / max(1, |a|).
inline double relative_gap(cd a, cd b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

/// Hausdorff distance between two finite point sets in the complex plane.
inline double hausdorff_distance(const DenseVector& a, const DenseVector& b)
{
    if (a.size() == 0 || b.size() == 0) return a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
    auto directed = [](const DenseVector& x, const DenseVector& y) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < y.size(); ++j) best = std::min(best, std::abs(x[i] - y[j]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

/// Distance between multisets: greedy matching on globally sorted candidate edges (each point's
/// nearest few partners), with the worst matched gap returned.  Different cardinalities give infinity.
inline double multiset_distance(const DenseVector& a, const DenseVector& b,
                                double (*gap)(cd, cd) = [](cd x, cd y) { return std::abs(x - y); })
{
    const Eigen::Index n = a.size();
    if (b.size() != n) return std::numeric_limits<double>::infinity();
    if (n == 0) return 0.0;
    struct Edge {
        double d;
        Eigen::Index i, j;
    };
    const Eigen::Index width = std::min<Eigen::Index>(n, 12);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n * width));
    std::vector<std::pair<double, Eigen::Index>> row(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = {gap(a[i], b[j]), j};
        std::partial_sort(row.begin(), row.begin() + width, row.end());
        for (Eigen::Index w = 0; w < width; ++w) edges.push_back({row[w].first, i, row[w].second});
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        return x.d != y.d ? x.d < y.d : (x.i != y.i ? x.i < y.i : x.j < y.j);
    });
    std::vector<char> ua(static_cast<std::size_t>(n), 0), ub(static_cast<std::size_t>(n), 0);
    double worst = 0.0;
    Eigen::Index matched = 0;
    for (const auto& e : edges) {
        if (ua[e.i] || ub[e.j]) continue;
        ua[e.i] = ub[e.j] = 1;
        worst = std::max(worst, e.d);
        ++matched;
    }
    for (Eigen::Index i = 0; i < n && matched < n; ++i) {
        if (ua[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bj = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!ub[j] && gap(a[i], b[j]) < best) {
                best = gap(a[i], b[j]);
                bj = j;
            }
        ua[i] = ub[bj] = 1;
        worst = std::max(worst, best);
        ++matched;
    }
    return worst;
}

/// Distance of a spectrum from its own complex conjugate.
inline double conjugation_defect(const DenseVector& v) { return multiset_distance(v, v.conjugate()); }

// ---------------------------------------------------------------------------------------------
// Zero modes, traces

struct ZeroModeReport {
    std::vector<int> counts;
    std::vector<int> betti;
    bool matches_betti = false;
};

inline ZeroModeReport zero_modes(const Spectrum& s, const Tolerances& tol)
{
    ZeroModeReport r;
    const int D = static_cast<int>(s.size()) - 1;
    for (int k = 0; k <= D; ++k) {
        const double thr = tol.tol_zero * std::max(1.0, spectral_radius(s[static_cast<std::size_t>(k)]));
        int c = 0;
        for (Eigen::Index i = 0; i < s[static_cast<std::size_t>(k)].size(); ++i)
            if (std::abs(s[static_cast<std::size_t>(k)][i]) <= thr) ++c;
        r.counts.push_back(c);
        r.betti.push_back(binomial(D, k));
    }
    r.matches_betti = r.counts == r.betti;
    return r;
}

/// W(t) = sum_k (-1)^k sum_n exp(-E t).
inline std::vector<cd> witten_index(const Spectrum& s, const std::vector<double>& t_grid)
{
    std::vector<cd> out;
    for (double t : t_grid) {
        require(t > 0.0, ErrorKind::domain, "Witten index needs t > 0");
        cd w = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            cd part = 0.0;
            for (Eigen::Index i = 0; i < s[k].size(); ++i) part += std::exp(-s[k][i] * t);
            w += (k % 2 ? -1.0 : 1.0) * part;
        }
        out.push_back(w);
    }
    return out;
}

/// Z(t) = sum_k sum_n exp(-E t).
inline cd partition_value(const Spectrum& s, double t)
{
    cd z = 0.0;
    for (const auto& v : s)
        for (Eigen::Index i = 0; i < v.size(); ++i) z += std::exp(-v[i] * t);
    return z;
}

inline std::vector<cd> partition_function(const Spectrum& s, const std::vector<double>& t_grid)
{
    std::vector<cd> out;
    for (double t : t_grid) {
        require(t > 0.0, ErrorKind::domain, "partition function needs t > 0");
        out.push_back(partition_value(s, t));
    }
    return out;
}

struct SlopeFit {
    double slope = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    int points = 0;
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Large-t log-slope of Z.  With a ground eigenvalue of negative real part the fit window is
/// [T, 2T], T = 3/|Re E_g|; oscillating Z (complex ground) is fitted through the local maxima of |Z|.
/// Otherwise log|Z| is fitted over [t_max/2, t_max].
inline SlopeFit partition_slope(const Spectrum& s, cd ground, double t_max = 50.0)
{
    SlopeFit fit;
    const bool growing = ground.real() < 0.0;
    fit.t_begin = growing ? 3.0 / std::abs(ground.real()) : 0.5 * t_max;
    fit.t_end = growing ? 2.0 * fit.t_begin : t_max;
    const int samples = 4000;
    std::vector<double> t(samples + 1), lz(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        t[i] = fit.t_begin + (fit.t_end - fit.t_begin) * i / samples;
        lz[i] = std::log(std::abs(partition_value(s, t[i])));
    }
    std::vector<double> x, y;
    const bool oscillating = growing && std::abs(ground.imag()) > 0.0;
    for (int i = 0; i <= samples; ++i) {
        if (oscillating && (i == 0 || i == samples || lz[i] < lz[i - 1] || lz[i] < lz[i + 1])) continue;
        x.push_back(t[i]);
        y.push_back(lz[i]);
    }
    fit.points = static_cast<int>(x.size());
    fit.slope = x.size() >= 2 ? detail::ls_slope(x, y) : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

// ---------------------------------------------------------------------------------------------
// Pairing

struct PairEntry {
    int degree = 0;
    Eigen::Index index = 0;
    cd value;
    int partner_degree = -1;
    double residual = 0.0;
    bool ok = false;
};

struct PairingReport {
    std::vector<PairEntry> entries;
    double even_odd_distance = 0.0;
    int violations = 0;
    bool cluster_matched = false;
    bool ok() const { return violations == 0; }
};

/// Boson-fermion pairing: every nonzero eigenpair either maps by d to an eigenvector of the next
/// degree with the same eigenvalue, or (if d psi vanishes) has a partner eigenvalue one degree below.
inline PairingReport pairing_check(const std::vector<EigenSystem>& es, const SeoBlocks& H, const Tolerances& tol)
{
    PairingReport rep;
    const int D = static_cast<int>(es.size()) - 1;
    require(H.dimension() == D, ErrorKind::domain, "pairing_check: block count mismatch");
    const BasisLayout& l = H.layout();
    const Spectrum s = values_of(es);
    const double thr = tol.tol_zero * std::max(1.0, spectral_radius(s));
    for (int k = 0; k <= D; ++k) {
        const EigenSystem& e = es[static_cast<std::size_t>(k)];
        require(e.has_vectors(), ErrorKind::domain, "pairing_check needs eigenvectors");
        if (e.near_defective) rep.cluster_matched = true;
        std::optional<DenseMatrix> dpsi;
        if (k < D) dpsi = DenseMatrix(d_matrix(l, k).matrix * e.right);
        for (Eigen::Index n = 0; n < e.size(); ++n) {
            const cd lam = e.values[n];
            if (std::abs(lam) <= thr) continue;
            PairEntry p{k, n, lam, -1, 0.0, false};
            const double dn = dpsi ? dpsi->col(n).norm() : 0.0;
            if (dn > tol.tol_pair) {
                const DenseVector x = dpsi->col(n);
                const DenseVector hx = H[k + 1].matrix * x;
                p.residual = (hx - lam * x).norm() / dn;
                p.partner_degree = k + 1;
                p.ok = p.residual <= tol.tol_pair * std::max(1.0, std::abs(lam));
            } else if (k > 0) {
                const DenseVector& below = es[static_cast<std::size_t>(k - 1)].values;
                double best = std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j < below.size(); ++j) best = std::min(best, relative_gap(lam, below[j]));
                p.residual = best;
                p.partner_degree = k - 1;
                p.ok = best <= tol.tol_pair;
            }
            if (!p.ok) ++rep.violations;
            rep.entries.push_back(p);
        }
    }
    std::vector<cd> even, odd;
    for (int k = 0; k <= D; ++k)
        for (Eigen::Index n = 0; n < s[static_cast<std::size_t>(k)].size(); ++n) {
            const cd lam = s[static_cast<std::size_t>(k)][n];
            if (std::abs(lam) > thr) (k % 2 ? odd : even).push_back(lam);
        }
    rep.even_odd_distance = multiset_distance(Eigen::Map<DenseVector>(even.data(), static_cast<Eigen::Index>(even.size())),
                                              Eigen::Map<DenseVector>(odd.data(), static_cast<Eigen::Index>(odd.size())),
                                              relative_gap);
    if (!(rep.even_odd_distance <= tol.tol_pair)) ++rep.violations;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Convergence, classification, ground state

/// converged[i] iff some eigenvalue of `refined` lies within tol * max(|v_i|, 1) of v_i.
inline std::vector<char> convergence_flags(const DenseVector& v, const DenseVector& refined, double tol)
{
    std::vector<char> out(static_cast<std::size_t>(v.size()), 0);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < refined.size(); ++j) best = std::min(best, relative_gap(v[i], refined[j]));
        out[static_cast<std::size_t>(i)] = best <= tol;
    }
    return out;
}

enum class SusyPhase { unbroken, broken_real, broken_complex, indeterminate };

inline std::string to_string(SusyPhase p)
{
    switch (p) {
    case SusyPhase::unbroken: return "unbroken";
    case SusyPhase::broken_real: return "broken-real";
    case SusyPhase::broken_complex: return "broken-complex";
    case SusyPhase::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

inline bool is_broken(SusyPhase p) { return p == SusyPhase::broken_real || p == SusyPhase::broken_complex; }

struct GroundState {
    int degree = -1;
    Eigen::Index index = -1;
    cd value;
};

struct Classification {
    SusyPhase phase = SusyPhase::indeterminate;
    GroundState ground;
    bool convergence_checked = false;
    bool ground_converged = false;
    double scale = 1.0;
    std::string diagnostics;
};

/// Ground state: minimal Re, then minimal |Im|, then maximal degree, then lowest index.
/// Ties are decided within `tie` (absolute).
inline GroundState ground_state(const Spectrum& s, double tie)
{
    GroundState g;
    double min_re = std::numeric_limits<double>::infinity();
    for (const auto& v : s)
        for (Eigen::Index i = 0; i < v.size(); ++i) min_re = std::min(min_re, v[i].real());
    double min_im = std::numeric_limits<double>::infinity();
    for (const auto& v : s)
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i].real() <= min_re + tie) min_im = std::min(min_im, std::abs(v[i].imag()));
    for (int k = static_cast<int>(s.size()) - 1; k >= 0 && g.degree < 0; --k) {
        const DenseVector& v = s[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i].real() <= min_re + tie && std::abs(v[i].imag()) <= min_im + tie) {
                g = {k, i, v[i]};
                break;
            }
    }
    return g;
}

/// Phase of the spectrum (Fig. a/b/c taxonomy).  `converged` holds per-eigenvalue flags from a
/// refinement check (empty = no check performed); `scale` sets the zero threshold.
inline Classification classify(const Spectrum& s, const std::vector<std::vector<char>>& converged, double scale,
                               const Tolerances& tol)
{
    Classification c;
    c.scale = std::max(1.0, scale);
    const double thr = tol.tol_zero * c.scale;
    c.ground = ground_state(s, thr);
    c.convergence_checked = !converged.empty();
    if (c.ground.degree < 0) {
        c.diagnostics = "empty spectrum";
        return c;
    }
    c.ground_converged = c.convergence_checked &&
                         converged[static_cast<std::size_t>(c.ground.degree)][static_cast<std::size_t>(c.ground.index)];
    const cd g = c.ground.value;
    if (!c.ground_converged) {
        c.diagnostics = c.convergence_checked ? "ground eigenvalue not stable under truncation refinement"
                                              : "no truncation-convergence check was performed";
        return c;
    }
    if (g.real() >= -thr) {
        c.phase = SusyPhase::unbroken;
    } else if (std::abs(g.imag()) <= thr) {
        c.phase = SusyPhase::broken_real;
    } else {
        const DenseVector& v = s[static_cast<std::size_t>(c.ground.degree)];
        bool partner = false;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (relative_gap(std::conj(g), v[i]) <= tol.tol_pair) partner = true;
        c.phase = partner ? SusyPhase::broken_complex : SusyPhase::indeterminate;
        if (!partner) c.diagnostics = "complex ground eigenvalue without a conjugate partner";
    }
    return c;
}

// ---------------------------------------------------------------------------------------------
// Time reversal, metric

/// Per k: Hausdorff distance between spec H^(k) and spec H_T^(D-k).
inline std::vector<double> isospectral_check(const Spectrum& h, const Spectrum& ht)
{
    const std::size_t D = h.size() - 1;
    require(ht.size() == h.size(), ErrorKind::domain, "isospectral_check: degree count mismatch");
    std::vector<double> out;
    for (std::size_t k = 0; k <= D; ++k) out.push_back(hausdorff_distance(h[k], ht[D - k]));
    return out;
}

/// Per k: |H^(k)^dagger - star^{-1} H_T^(D-k) star|_F / |H^(k)|_F.
inline std::vector<double> adjoint_check(const SeoBlocks& h, const SeoBlocks& ht)
{
    const int D = h.dimension();
    const BasisLayout& l = h.layout();
    std::vector<double> out;
    for (int k = 0; k <= D; ++k) {
        const OperatorBlock rhs = hodge_star_inverse(l, D - k) * ht[D - k] * hodge_star_matrix(l, k);
        const SparseMatrix diff = SparseMatrix(h[k].matrix.adjoint()) - rhs.matrix;
        const double nrm = h[k].matrix.norm();
        out.push_back(nrm > 0.0 ? diff.norm() / nrm : diff.norm());
    }
    return out;
}

struct HilbertMetric {
    DenseMatrix eta;
    double residual = 0.0;
};

/// eta = L^H Q L with L the left-vector matrix and Q the involution pairing each eigenvalue with
/// its complex conjugate (identity on real eigenvalues); then eta^{-1} H^dagger eta = H.
inline HilbertMetric hilbert_metric(const EigenSystem& es, const OperatorBlock& block, double cond_limit = 1e10)
{
    require(es.has_vectors(), ErrorKind::domain, "hilbert_metric needs eigenvectors");
    require(!es.near_defective && es.condition <= cond_limit, ErrorKind::numerical,
            "hilbert_metric: overlap matrix is ill-conditioned (condition " + std::to_string(es.condition) + ")");
    const Eigen::Index n = es.size();
    const double scale = std::max(1.0, spectral_radius(es.values));
    std::vector<Eigen::Index> partner(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (partner[i] >= 0) continue;
        if (std::abs(es.values[i].imag()) <= 1e-12 * scale) {
            partner[i] = i;
            continue;
        }
        Eigen::Index best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && partner[j] < 0 && std::abs(es.values[j] - std::conj(es.values[i])) < bd) {
                bd = std::abs(es.values[j] - std::conj(es.values[i]));
                best = j;
            }
        require(best >= 0, ErrorKind::numerical, "hilbert_metric: unpaired complex eigenvalue");
        partner[i] = best;
        partner[best] = i;
    }
    DenseMatrix QL(n, n);
    for (Eigen::Index i = 0; i < n; ++i) QL.row(i) = es.left.row(partner[i]);
    HilbertMetric hm;
    hm.eta = es.left.adjoint() * QL;
    const DenseMatrix H = block.dense();
    // eta^{-1} = V Q V^H
    DenseMatrix QVh(n, n);
    const DenseMatrix Vh = es.right.adjoint();
    for (Eigen::Index i = 0; i < n; ++i) QVh.row(i) = Vh.row(partner[i]);
    const DenseMatrix inv = es.right * QVh;
    hm.residual = (inv * H.adjoint() * hm.eta - H).norm() / std::max(H.norm(), 1e-300);
    return hm;
}

// ---------------------------------------------------------------------------------------------
// Ground-state observables

/// integral f (bra ^ ket) for eigenpair n, computed without truncation loss.
inline cd expectation(const TrigField& f, const EigenSystem& es, Eigen::Index n)
{
    const FormVector rho = wedge_density(es.left_form(n), es.right_form(n));
    const BasisLayout& l = rho.layout;
    const double vol = std::pow(two_pi, l.dimension());
    cd s = 0.0;
    for (const auto& [q, c] : f.coefficients())
        if (auto cell = l.cell_index(-q)) s += c * rho.coeffs[l.index(0, *cell)];
    return vol * s;
}

/// <psi_n| (d i_f + i_f d) |psi_n>.
inline cd response(const FlowField& f, const EigenSystem& es, Eigen::Index n)
{
    const OperatorBlock L = lie_matrix(f, *es.layout, es.degree);
    return es.left.row(n) * (L.matrix * es.right.col(n));
}

/// C(t) = <psi_n| M_f exp(-t H) M_g |psi_n>, the exponential applied through the eigendecomposition.
inline std::vector<cd> correlator(const TrigField& f, const TrigField& g, const std::vector<double>& t_list,
                                  const EigenSystem& es, Eigen::Index n)
{
    const BasisLayout& l = *es.layout;
    const DenseVector gpsi = multiply_matrix(g, l, es.degree).matrix * es.right.col(n);
    const Eigen::RowVectorXcd fbra = es.left.row(n) * multiply_matrix(f, l, es.degree).matrix;
    const DenseVector coeff = es.left * gpsi;
    const Eigen::RowVectorXcd proj = fbra * es.right;
    std::vector<cd> out;
    for (double t : t_list) {
        require(t >= 0.0, ErrorKind::domain, "correlator needs t >= 0");
        cd s = 0.0;
        for (Eigen::Index m = 0; m < es.size(); ++m) s += proj[m] * std::exp(-es.values[m] * t) * coeff[m];
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Full and partial pipelines

/// Eigen-decomposes every degree (in parallel).
inline std::vector<EigenSystem> eigensolve_all(const SeoBlocks& h, const EigenOptions& opt = {})
{
    std::vector<EigenSystem> out(h.blocks.size());
    parallel_for(h.blocks.size(), [&](std::size_t k) { out[k] = eigensolve(h.blocks[k], opt); });
    return out;
}

inline Spectrum spectrum_of(const SeoBlocks& h)
{
    EigenOptions o;
    o.vectors = false;
    return values_of(eigensolve_all(h, o));
}

using BlockBuilder = std::function<SeoBlocks(int truncation)>;

struct LowSpectrumOptions {
    int seeds_per_degree = 2;
    int nev_per_seed = 10;
    int coarse_offset = 2;
    /// offset added to every shift so that exact eigenvalues (zero modes) never make the LU singular
    cd shift_offset{0.0131, 0.0077};
};

/// Lowest-Re part of each degree's spectrum at truncation N without a full dense solve: seeds from a
/// dense solve at N - coarse_offset, refined at N by shift-invert Arnoldi.  Values of a real operator
/// come in conjugate pairs, so seeds with Im < 0 are skipped and results are mirrored.
inline Spectrum low_spectrum(const BlockBuilder& build, int N, const LowSpectrumOptions& opt = {})
{
    const Spectrum coarse = spectrum_of(build(N - opt.coarse_offset));
    const SeoBlocks fine = build(N);
    Spectrum out(fine.blocks.size());
    for (std::size_t k = 0; k < fine.blocks.size(); ++k) {
        std::vector<cd> seeds;
        const DenseVector& c = coarse[k];
        for (Eigen::Index i = 0; i < c.size() && static_cast<int>(seeds.size()) < opt.seeds_per_degree; ++i) {
            if (c[i].imag() < -1e-9) continue;
            bool fresh = true;
            for (cd s : seeds) fresh = fresh && std::abs(s - c[i]) > 1e-3 * std::max(1.0, std::abs(c[i]));
            if (fresh) seeds.push_back(c[i]);
        }
        std::vector<cd> found;
        auto add = [&](cd v) {
            for (cd f : found)
                if (std::abs(f - v) <= 1e-9 * std::max(1.0, std::abs(v))) return;
            found.push_back(v);
        };
        const bool real = is_real_operator(fine.blocks[k]);
        for (cd s : seeds)
            for (const auto& r : shift_invert_eigs(fine.blocks[k].matrix, s + opt.shift_offset, opt.nev_per_seed)) {
                add(r.value);
                if (real) add(std::conj(r.value));
            }
        DenseVector v(static_cast<Eigen::Index>(found.size()));
        for (std::size_t i = 0; i < found.size(); ++i) v[static_cast<Eigen::Index>(i)] = found[i];
        const auto order = detail::sort_order(v);
        out[k].resize(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) out[k][i] = v[order[static_cast<std::size_t>(i)]];
    }
    return out;
}

/// Eigenvalue of `block` nearest to `target` (shift-invert, used for the refinement check).
inline cd nearest_eigenvalue(const OperatorBlock& block, cd target, cd offset = {0.0131, 0.0077})
{
    const auto r = shift_invert_eigs(block.matrix, target + 1e-3 * offset, 4);
    cd best = r.front().value;
    for (const auto& x : r)
        if (std::abs(x.value - target) < std::abs(best - target)) best = x.value;
    return best;
}

// ---------------------------------------------------------------------------------------------
// Langevin oracle

struct LangevinOracle {
    double max_imag_ratio = 0.0;   ///< max |Im E| / spectral radius over the compared eigenvalues
    double max_mismatch = 0.0;     ///< max relative distance from a compared eigenvalue to the Hermitian spectrum
    int compared = 0;
    int skipped = 0;  ///< resolved in H but the nearest Hermitian eigenvalue is not
};

/// Compares H^(k) against the Hermitian Witten-Laplacian form on the eigenvalues that both
/// truncations resolve at the comparison precision, i.e. that move by at most
/// `resolve_tol` * max(1, |E|) under N -> N+2.
inline LangevinOracle langevin_oracle(const TrigField& potential, double theta, int N, double resolve_tol = 1e-8)
{
    const int D = potential.dimension();
    const BasisLayout l(D, N), l2(D, N + 2);
    const SeoBlocks h = seo_blocks(langevin_model(l, potential, theta));
    const SeoBlocks h2 = seo_blocks(langevin_model(l2, potential, theta));
    LangevinOracle o;
    for (int k = 0; k <= D; ++k) {
        const DenseVector v = eigenvalues(h[k]);
        const DenseVector v2 = eigenvalues(h2[k]);
        auto hermitian = [&](const BasisLayout& lay) {
            Eigen::SelfAdjointEigenSolver<DenseMatrix> es(langevin_hermitian_block(lay, potential, theta, k),
                                                          Eigen::EigenvaluesOnly);
            return DenseVector(es.eigenvalues().cast<cd>());
        };
        const DenseVector hu = hermitian(l);
        const auto hu_flags = convergence_flags(hu, hermitian(l2), resolve_tol);
        const double radius = std::max(1.0, spectral_radius(v));
        const auto flags = convergence_flags(v, v2, resolve_tol);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!flags[static_cast<std::size_t>(i)]) continue;
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < hu.size(); ++j)
                if (relative_gap(v[i], hu[j]) < relative_gap(v[i], hu[best])) best = j;
            if (!hu_flags[static_cast<std::size_t>(best)]) {
                ++o.skipped;
                continue;
            }
            ++o.compared;
            o.max_imag_ratio = std::max(o.max_imag_ratio, std::abs(v[i].imag()) / radius);
            o.max_mismatch = std::max(o.max_mismatch, relative_gap(v[i], hu[best]));
        }
    }
    return o;
}

}  // namespace sts
