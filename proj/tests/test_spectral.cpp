#include <gtest/gtest.h>

#include <algorithm>

#include "sts/models.hpp"
#include "sts/pipeline.hpp"
#include "test_helpers.hpp"

using namespace sts;

namespace {

Spectrum full_spectrum(const SdeModel& m) { return spectrum_of(seo_blocks(m)); }

double max_abs_w(const std::vector<cd>& w)
{
    double m = 0.0;
    for (cd x : w) m = std::max(m, std::abs(x));
    return m;
}

/// Gibbs average of f under exp(-U/theta) on T^1 by the periodic trapezoid rule.
double gibbs_average(const TrigField& f, const TrigField& U, double theta)
{
    const int n = 4096;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = two_pi * i / n;
        const double w = std::exp(-U(std::vector<double>{x}) / theta);
        num += f(std::vector<double>{x}) * w;
        den += w;
    }
    return num / den;
}

std::vector<SdeModel> unbroken_suite()
{
    return {models::diffusion(1, 6, 0.7), models::drift(1, 6, 0.5, {1.3}), models::langevin_cos(1, 12, 0.5),
            models::langevin_double(1, 12, 0.4, 0.5), models::shear_2d(4, 0.4), models::multiplicative_1d(8, 0.6, 0.3)};
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// eigensolve

TEST(Eigensolve, DiagonalBlock)
{
    DenseMatrix a = DenseMatrix::Zero(3, 3);
    a(0, 0) = 4.0;
    a(1, 1) = 0.0;
    a(2, 2) = 1.0;
    const EigenSystem es = eigensolve(OperatorBlock::from_dense(a));
    EXPECT_NEAR(std::abs(es.values[0] - 0.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.values[1] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.values[2] - 4.0), 0.0, 1e-14);
    // canonical basis vectors, largest entry real positive
    const int expected[3] = {1, 2, 0};
    for (int n = 0; n < 3; ++n) {
        DenseVector e = DenseVector::Zero(3);
        e[expected[n]] = 1.0;
        EXPECT_LT((es.right.col(n) - e).norm(), 1e-14);
    }
}

TEST(Eigensolve, FreeDiffusionDegreeZero)
{
    const SeoBlocks h = seo_blocks(models::diffusion(1, 2, 1.0));
    const DenseVector v = eigenvalues(h[0]);
    const double expected[5] = {0, 1, 1, 4, 4};
    ASSERT_EQ(v.size(), 5);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(std::abs(v[i] - expected[i]), 0.0, 1e-12);
}

TEST(Eigensolve, ReconstructionOracle)
{
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    DenseMatrix a(6, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = cd(nd(gen), nd(gen));
    const EigenSystem es = eigensolve(OperatorBlock::from_dense(a));
    DenseMatrix rec = DenseMatrix::Zero(6, 6);
    for (Eigen::Index n = 0; n < 6; ++n) rec += es.values[n] * es.right.col(n) * es.left.row(n);
    EXPECT_LT((rec - a).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(es.biorthogonality_residual, 1e-10);
    EXPECT_FALSE(es.near_defective);
    for (Eigen::Index n = 0; n < 6; ++n) {
        Eigen::Index big = 0;
        es.right.col(n).cwiseAbs().maxCoeff(&big);
        EXPECT_EQ(es.right(big, n).imag(), 0.0);
        EXPECT_GT(es.right(big, n).real(), 0.0);
        EXPECT_NEAR(es.right.col(n).norm(), 1.0, 1e-12);
    }
    for (Eigen::Index n = 1; n < 6; ++n) {
        const cd p = es.values[n - 1], q = es.values[n];
        EXPECT_TRUE(p.real() < q.real() || (p.real() == q.real() && p.imag() <= q.imag()));
    }
}

TEST(Eigensolve, RealBasisMatchesComplexSolver)
{
    std::mt19937_64 gen(5);
    SdeModel m = models::diffusion(2, 3, 0.3);
    m.drift = sts::testing::random_flow(2, 1, gen);
    const SeoBlocks h = seo_blocks(m);
    for (int k = 0; k <= 2; ++k) {
        EigenOptions complex_path;
        complex_path.real_basis = false;
        complex_path.vectors = false;
        const DenseVector a = eigenvalues(h[k]);
        const DenseVector b = eigensolve(h[k], complex_path).values;
        EXPECT_LT(multiset_distance(a, b), 1e-9) << "degree " << k;
    }
}

TEST(Eigensolve, DefectiveBlockIsFlagged)
{
    DenseMatrix j = DenseMatrix::Zero(2, 2);
    j(0, 0) = j(1, 1) = 1.0;
    j(0, 1) = 1.0;
    const EigenSystem es = eigensolve(OperatorBlock::from_dense(j));
    EXPECT_TRUE(es.near_defective);
    EXPECT_NEAR(std::abs(es.values[0] - 1.0), 0.0, 1e-6);
}

TEST(Eigensolve, RejectsNonFinite)
{
    DenseMatrix a = DenseMatrix::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        eigensolve(OperatorBlock::from_dense(a));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
}

TEST(ShiftInvert, MatchesDenseNearShift)
{
    const SeoBlocks h = seo_blocks(models::shear_2d(5, 0.3));
    const DenseVector dense = eigenvalues(h[1]);
    const cd sigma(0.4, 0.1);
    const auto ritz = shift_invert_eigs(h[1].matrix, sigma, 6);
    ASSERT_FALSE(ritz.empty());
    for (const auto& r : ritz) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < dense.size(); ++i) best = std::min(best, std::abs(dense[i] - r.value));
        EXPECT_LT(best, 1e-8) << r.value;
    }
    // the nearest dense eigenvalue is among the Ritz values
    Eigen::Index near = 0;
    (dense.array() - sigma).abs().minCoeff(&near);
    double found = std::numeric_limits<double>::infinity();
    for (const auto& r : ritz) found = std::min(found, std::abs(r.value - dense[near]));
    EXPECT_LT(found, 1e-8);
}

TEST(LowSpectrum, AgreesWithDenseLowEnd)
{
    const SdeModel base = models::shear_2d(6, 0.3);
    const BlockBuilder build = [&](int N) { return seo_blocks(models::with_truncation(base, N)); };
    const Spectrum low = low_spectrum(build, 6);
    const Spectrum dense = full_spectrum(base);
    for (int k = 0; k <= 2; ++k) {
        ASSERT_GT(low[k].size(), 0);
        for (Eigen::Index i = 0; i < low[k].size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < dense[k].size(); ++j) best = std::min(best, std::abs(dense[k][j] - low[k][i]));
            EXPECT_LT(best, 1e-8);
        }
        EXPECT_NEAR(std::abs(low[k][0] - dense[k][0]), 0.0, 1e-8);
    }
}

// ---------------------------------------------------------------------------------------------
// zero modes, Witten index, partition function

TEST(ZeroModes, FreeDiffusionTorus)
{
    const Tolerances tol;
    EXPECT_EQ(zero_modes(full_spectrum(models::diffusion(2, 3, 1.0)), tol).counts, (std::vector<int>{1, 2, 1}));
    const ZeroModeReport z3 = zero_modes(full_spectrum(models::diffusion(3, 2, 1.0)), tol);
    EXPECT_EQ(z3.counts, (std::vector<int>{1, 3, 3, 1}));
    EXPECT_TRUE(z3.matches_betti);
}

TEST(ZeroModes, LangevinCos)
{
    const ZeroModeReport z = zero_modes(full_spectrum(models::langevin_cos(1, 16, 0.5)), Tolerances{});
    EXPECT_EQ(z.counts, (std::vector<int>{1, 1}));
}

TEST(Witten, FreeDiffusionVanishes)
{
    for (int D = 1; D <= 3; ++D) {
        const auto w = witten_index(full_spectrum(models::diffusion(D, D == 3 ? 2 : 4, 0.8)), {0.1, 1.0, 10.0});
        EXPECT_LT(max_abs_w(w), 1e-8) << "D=" << D;
    }
}

TEST(Witten, LangevinCancellation)
{
    const auto w = witten_index(full_spectrum(models::langevin_cos(1, 16, 0.5)), {0.1, 1.0, 10.0});
    EXPECT_LT(max_abs_w(w), 1e-8);
}

TEST(Partition, FreeDiffusionClosedForm)
{
    const Spectrum s = full_spectrum(models::diffusion(1, 2, 1.0));
    for (double t : {0.1, 0.7, 3.0}) {
        const cd z = partition_value(s, t);
        EXPECT_NEAR(z.real(), 2.0 * (1.0 + 2.0 * std::exp(-t) + 2.0 * std::exp(-4.0 * t)), 1e-12);
        EXPECT_NEAR(z.imag(), 0.0, 1e-12);
    }
}

TEST(Partition, UnbrokenTendsToBettiSum)
{
    const Spectrum s = full_spectrum(models::langevin_cos(1, 12, 0.5));
    EXPECT_NEAR(partition_value(s, 200.0).real(), 2.0, 1e-8);
    const Spectrum s2 = full_spectrum(models::shear_2d(4, 0.5));
    EXPECT_NEAR(partition_value(s2, 400.0).real(), 4.0, 1e-6);
}

TEST(Partition, SlopeOfSyntheticBrokenSpectrum)
{
    // zero modes of T^3 plus a broken complex quartet and decaying modes
    Spectrum s(4);
    auto set = [](std::vector<cd> v) {
        DenseVector out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
        return out;
    };
    const cd g(-0.02, 0.6);
    s[0] = set({0.0, 0.3});
    s[1] = set({std::conj(g), g, 0.0, 0.0, 0.0, 0.3, 0.5});
    s[2] = set({std::conj(g), g, 0.0, 0.0, 0.0, 0.5});
    s[3] = set({0.0});
    const SlopeFit fit = partition_slope(s, std::conj(g));
    EXPECT_NEAR(fit.t_begin, 150.0, 1e-9);
    EXPECT_NEAR(fit.slope, 0.02, 0.05 * 0.02);
}

// ---------------------------------------------------------------------------------------------
// pairing

TEST(Pairing, FreeDiffusionT1)
{
    const SdeModel m = models::diffusion(1, 3, 0.7);
    const SeoBlocks h = seo_blocks(m);
    const PairingReport p = pairing_check(eigensolve_all(h), h, Tolerances{});
    EXPECT_TRUE(p.ok());
    for (const auto& e : p.entries) {
        if (e.degree == 0) {
            EXPECT_EQ(e.partner_degree, 1);
        }
    }
    EXPECT_EQ(p.entries.size(), 12u);
}

TEST(Pairing, LangevinResiduals)
{
    const SeoBlocks h = seo_blocks(models::langevin_cos(1, 16, 0.5));
    const PairingReport p = pairing_check(eigensolve_all(h), h, Tolerances{});
    EXPECT_TRUE(p.ok());
    for (const auto& e : p.entries) EXPECT_LE(e.residual, 1e-8 * std::max(1.0, std::abs(e.value)));
}

TEST(Pairing, InvariantOnUnbrokenSuite)
{
    for (const auto& m : unbroken_suite()) {
        const SeoBlocks h = seo_blocks(m);
        const PairingReport p = pairing_check(eigensolve_all(h), h, Tolerances{});
        EXPECT_TRUE(p.ok()) << "violations " << p.violations;
        EXPECT_LE(p.even_odd_distance, 1e-6);
    }
}

// ---------------------------------------------------------------------------------------------
// classification and ground state

TEST(Classify, ConstantDriftUnbroken)
{
    const SdeModel m = models::drift(1, 6, 0.5, {1.7});
    const Spectrum s = full_spectrum(m);
    const Spectrum s2 = full_spectrum(models::with_truncation(m, 8));
    std::vector<std::vector<char>> flags;
    for (int k = 0; k <= 1; ++k) flags.push_back(convergence_flags(s[k], s2[k], 1e-4));
    const Classification c = classify(s, flags, spectral_radius(s), Tolerances{});
    EXPECT_EQ(c.phase, SusyPhase::unbroken);
    // complex eigenvalues exist off the ground state
    double im = 0.0;
    for (const auto& v : s) im = std::max(im, v.imag().cwiseAbs().maxCoeff());
    EXPECT_GT(im, 1.0);
    EXPECT_EQ(c.ground.degree, 1);
}

TEST(Classify, WithoutCheckIsIndeterminate)
{
    const Spectrum s = full_spectrum(models::diffusion(1, 3, 1.0));
    const Classification c = classify(s, {}, spectral_radius(s), Tolerances{});
    EXPECT_EQ(c.phase, SusyPhase::indeterminate);
    EXPECT_FALSE(c.convergence_checked);
    EXPECT_FALSE(c.diagnostics.empty());
}

TEST(Classify, SyntheticPhases)
{
    auto one = [](std::vector<std::vector<cd>> per) {
        Spectrum s;
        for (auto& v : per) {
            DenseVector d(static_cast<Eigen::Index>(v.size()));
            for (std::size_t i = 0; i < v.size(); ++i) d[static_cast<Eigen::Index>(i)] = v[i];
            s.push_back(d);
        }
        return s;
    };
    auto all_true = [](const Spectrum& s) {
        std::vector<std::vector<char>> f;
        for (const auto& v : s) f.emplace_back(static_cast<std::size_t>(v.size()), 1);
        return f;
    };
    const Tolerances tol;
    // broken-real pair in degrees (1, 2): the degree-2 member is selected
    const Spectrum br = one({{0.0, 0.5}, {-0.2, 0.0}, {-0.2, 0.0}, {0.0}});
    Classification c = classify(br, all_true(br), 1.0, tol);
    EXPECT_EQ(c.phase, SusyPhase::broken_real);
    EXPECT_EQ(c.ground.degree, 2);
    // complex quartet: deterministic choice, lowest index in the maximal degree
    const Spectrum bc = one({{0.0}, {{-0.1, -0.5}, {-0.1, 0.5}}, {{-0.1, -0.5}, {-0.1, 0.5}}, {0.0}});
    c = classify(bc, all_true(bc), 1.0, tol);
    EXPECT_EQ(c.phase, SusyPhase::broken_complex);
    EXPECT_EQ(c.ground.degree, 2);
    EXPECT_EQ(c.ground.index, 0);
    // missing conjugate partner
    const Spectrum lone = one({{0.0}, {{-0.1, 0.5}}, {0.0}, {0.0}});
    c = classify(lone, all_true(lone), 1.0, tol);
    EXPECT_EQ(c.phase, SusyPhase::indeterminate);
    // unconverged ground
    auto flags = all_true(br);
    flags[2][0] = 0;
    c = classify(br, flags, 1.0, tol);
    EXPECT_EQ(c.phase, SusyPhase::indeterminate);
    EXPECT_TRUE(c.convergence_checked);
    EXPECT_FALSE(c.ground_converged);
}

TEST(GroundState, DiffusionTopDegree)
{
    for (int D = 1; D <= 3; ++D) {
        const GroundState g = ground_state(full_spectrum(models::diffusion(D, 2, 1.0)), 1e-8);
        EXPECT_EQ(g.degree, D);
        EXPECT_NEAR(std::abs(g.value), 0.0, 1e-12);
    }
}

TEST(GroundState, SmallestImaginaryPartWins)
{
    Spectrum s(2);
    s[0].resize(2);
    s[0] << cd(-0.3, 0.2), cd(-0.3, -0.2);
    s[1].resize(2);
    s[1] << cd(-0.3, 0.05), cd(0.1, 0.0);
    const GroundState g = ground_state(s, 1e-9);
    EXPECT_EQ(g.degree, 1);
    EXPECT_EQ(g.index, 0);
}

TEST(Classify, LowDimensionsNeverBroken)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> th(0.4, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const int D = 1 + trial % 2;
        const int N = D == 1 ? 10 : 5;
        SdeModel m = models::diffusion(D, N, th(gen));
        m.drift = sts::testing::random_flow(D, 1, gen);
        const BlockBuilder build = [&](int n) { return seo_blocks(models::with_truncation(m, n)); };
        SpectralRequest req;
        req.check_convergence = true;
        const SpectralRun run = run_spectrum(build, m.layout, req);
        EXPECT_FALSE(is_broken(run.cls.phase)) << "trial " << trial << " " << to_string(run.cls.phase);
        for (std::size_t k : {std::size_t{0}, static_cast<std::size_t>(D)}) {
            const DenseVector& v = run.values[k];
            int resolved = 0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                if (!run.converged[k][static_cast<std::size_t>(i)]) continue;
                ++resolved;
                EXPECT_GE(v[i].real(), -1e-8 * run.scale) << "trial " << trial << " degree " << k << " " << v[i];
            }
            EXPECT_GT(resolved, 0);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// time reversal and metric

TEST(Isospectral, NoDriftIsExact)
{
    const SdeModel m = models::diffusion(2, 3, 0.6);
    EXPECT_EQ(max_abs_w({}), 0.0);
    for (double d : isospectral_check(full_spectrum(m), spectrum_of(seo_time_reversed(m)))) EXPECT_EQ(d, 0.0);
}

TEST(Isospectral, ConstantDrift)
{
    const SdeModel m = models::drift(2, 3, 0.6, {0.7, -1.1});
    for (double d : isospectral_check(full_spectrum(m), spectrum_of(seo_time_reversed(m)))) EXPECT_LE(d, 1e-10);
}

TEST(Isospectral, RandomFlows)
{
    std::mt19937_64 gen(17);
    for (int D = 1; D <= 2; ++D) {
        SdeModel m = models::diffusion(D, D == 1 ? 8 : 4, 0.5);
        m.drift = sts::testing::random_flow(D, 1, gen);
        for (double d : isospectral_check(full_spectrum(m), spectrum_of(seo_time_reversed(m)))) EXPECT_LE(d, 1e-8);
    }
}

TEST(Adjoint, Examples)
{
    for (double r : adjoint_check(seo_blocks(models::diffusion(2, 3, 0.9)),
                                  seo_time_reversed(models::diffusion(2, 3, 0.9))))
        EXPECT_LE(r, 1e-12);
    SdeModel lv = langevin_model(BasisLayout(1, 8), TrigField::sine(1, {1, 0, 0}), 0.5);
    for (double r : adjoint_check(seo_blocks(lv), seo_time_reversed(lv))) EXPECT_LE(r, 1e-10);
    const SdeModel mult = models::multiplicative_1d(8, 0.5, 0.3);
    for (double r : adjoint_check(seo_blocks(mult), seo_time_reversed(mult))) EXPECT_LE(r, 1e-10);
}

TEST(HilbertMetric, HermitianIsIdentity)
{
    const SeoBlocks h = seo_blocks(models::diffusion(1, 3, 1.0));
    const EigenSystem es = eigensolve(h[0]);
    const HilbertMetric hm = hilbert_metric(es, h[0]);
    EXPECT_LT((hm.eta - DenseMatrix::Identity(es.size(), es.size())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(hm.residual, 1e-12);
}

TEST(HilbertMetric, ConstantDrift)
{
    const SeoBlocks h = seo_blocks(models::drift(1, 5, 0.4, {1.2}));
    const EigenSystem es = eigensolve(h[0]);
    EXPECT_LE(hilbert_metric(es, h[0]).residual, 1e-8);
}

TEST(HilbertMetric, LangevinWeightOracle)
{
    const double theta = 0.5;
    const int N = 16;
    const TrigField U = models::double_well_potential(1, 0.0);
    const SeoBlocks h = seo_blocks(langevin_model(BasisLayout(1, N), U, theta));
    const EigenSystem es = eigensolve(h[0]);
    const HilbertMetric hm = hilbert_metric(es, h[0]);
    EXPECT_LE(hm.residual, 1e-8);
    // Gram matrix of the exp(U/theta) weight, from a quadrature of the weight's Fourier series
    const BasisLayout& l = h.layout();
    const int n = static_cast<int>(l.cells());
    const int q = 512;
    std::vector<cd> w_hat(static_cast<std::size_t>(4 * N + 1));
    for (int m = -2 * N; m <= 2 * N; ++m) {
        cd s = 0.0;
        for (int i = 0; i < q; ++i) {
            const double x = two_pi * i / q;
            s += std::exp(U(std::vector<double>{x}) / theta) * std::exp(cd(0.0, -m * x));
        }
        w_hat[static_cast<std::size_t>(m + 2 * N)] = s / double(q);
    }
    DenseMatrix G(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int ka = l.wave_vector(static_cast<std::size_t>(a))[0];
            const int kb = l.wave_vector(static_cast<std::size_t>(b))[0];
            G(a, b) = w_hat[static_cast<std::size_t>(kb - ka + 2 * N)];
        }
    // the weight metric is of eta-form: diagonal in the low eigenbasis
    const int low = 6;
    const DenseMatrix M = es.right.leftCols(low).adjoint() * G * es.right.leftCols(low);
    for (int a = 0; a < low; ++a)
        for (int b = 0; b < low; ++b)
            if (a != b && std::abs(es.values[a] - es.values[b]) > 1e-6) {
                EXPECT_LT(std::abs(M(a, b)) / std::sqrt(std::abs(M(a, a) * M(b, b))), 1e-8) << a << "," << b;
            }
    // and so is eta itself
    const DenseMatrix E = es.right.leftCols(low).adjoint() * hm.eta * es.right.leftCols(low);
    for (int a = 0; a < low; ++a)
        for (int b = 0; b < low; ++b)
            if (a != b && std::abs(es.values[a] - es.values[b]) > 1e-6) {
                EXPECT_LT(std::abs(E(a, b)), 1e-8);
            }
}

TEST(HilbertMetric, RefusesNearDefective)
{
    DenseMatrix j = DenseMatrix::Zero(2, 2);
    j(0, 0) = j(1, 1) = 1.0;
    j(0, 1) = 1.0;
    const OperatorBlock b = OperatorBlock::from_dense(j);
    EXPECT_THROW(hilbert_metric(eigensolve(b), b), Error);
}

TEST(HilbertMetric, PseudoHermiticityOnRandomFlows)
{
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 3; ++trial) {
        SdeModel m = models::diffusion(1, 6, 0.6);
        m.drift = sts::testing::random_flow(1, 2, gen);
        const SeoBlocks h = seo_blocks(m);
        for (int k = 0; k <= 1; ++k) {
            const EigenSystem es = eigensolve(h[k]);
            if (es.near_defective) continue;
            EXPECT_LE(hilbert_metric(es, h[k]).residual, 1e-8);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// ground-state observables

TEST(Expectation, NormalizationAndDiffusion)
{
    const SeoBlocks h = seo_blocks(models::diffusion(1, 4, 1.0));
    const auto es = eigensolve_all(h);
    const GroundState g = ground_state(values_of(es), 1e-8);
    const EigenSystem& e = es[static_cast<std::size_t>(g.degree)];
    EXPECT_NEAR(std::abs(expectation(TrigField::constant(1, 1.0), e, g.index) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(expectation(TrigField::cosine(1, {1, 0, 0}), e, g.index)), 0.0, 1e-12);
}

TEST(Expectation, LangevinGibbsOracle)
{
    const double theta = 0.5;
    const TrigField U = models::double_well_potential(1, 0.0);
    const SeoBlocks h = seo_blocks(langevin_model(BasisLayout(1, 16), U, theta));
    const auto es = eigensolve_all(h);
    const GroundState g = ground_state(values_of(es), 1e-8);
    ASSERT_EQ(g.degree, 1);
    const TrigField f = TrigField::cosine(1, {1, 0, 0});
    const cd e = expectation(f, es[1], g.index);
    EXPECT_NEAR(e.real(), gibbs_average(f, U, theta), 1e-8);
    EXPECT_LE(std::abs(e.imag()), 1e-8);
    const TrigField f2 = TrigField::sine(1, {2, 0, 0}, 0.7) + TrigField::cosine(1, {3, 0, 0}, -0.2);
    EXPECT_NEAR(expectation(f2, es[1], g.index).real(), gibbs_average(f2, U, theta), 1e-8);
}

TEST(Response, VanishesOnUnbrokenGround)
{
    std::mt19937_64 gen(29);
    {
        const SeoBlocks h = seo_blocks(models::diffusion(2, 3, 1.0));
        const auto es = eigensolve_all(h);
        const GroundState g = ground_state(values_of(es), 1e-8);
        for (int i = 0; i < 3; ++i)
            EXPECT_LE(std::abs(response(sts::testing::random_flow(2, 1, gen), es[static_cast<std::size_t>(g.degree)], g.index)),
                      1e-10);
    }
    const SeoBlocks h = seo_blocks(models::langevin_cos(1, 16, 0.5));
    const auto es = eigensolve_all(h);
    const GroundState g = ground_state(values_of(es), 1e-8);
    for (int i = 0; i < 5; ++i)
        EXPECT_LE(std::abs(response(sts::testing::random_flow(1, 2, gen), es[static_cast<std::size_t>(g.degree)], g.index)),
                  1e-6);
}

TEST(Correlator, DiffusionSingleMode)
{
    const double theta = 0.8;
    const SeoBlocks h = seo_blocks(models::diffusion(1, 4, theta));
    const auto es = eigensolve_all(h);
    const GroundState g = ground_state(values_of(es), 1e-8);
    const TrigField c = TrigField::cosine(1, {1, 0, 0});
    const std::vector<double> ts{0.0, 0.5, 2.0};
    const auto C = correlator(c, c, ts, es[static_cast<std::size_t>(g.degree)], g.index);
    for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_NEAR(std::abs(C[i] - 0.5 * std::exp(-theta * ts[i])), 0.0, 1e-12);
}

TEST(Correlator, ZeroLagIsProductExpectation)
{
    const SeoBlocks h = seo_blocks(models::langevin_double(1, 16, 0.4, 0.5));
    const auto es = eigensolve_all(h);
    const GroundState g = ground_state(values_of(es), 1e-8);
    const TrigField f = TrigField::cosine(1, {1, 0, 0}), q = TrigField::sine(1, {1, 0, 0}, 0.3) + TrigField::constant(1, 1.0);
    const EigenSystem& e = es[static_cast<std::size_t>(g.degree)];
    const cd c0 = correlator(f, q, {0.0}, e, g.index)[0];
    EXPECT_NEAR(std::abs(c0 - expectation(trig_mul(f, q), e, g.index)), 0.0, 1e-8);
}

// ---------------------------------------------------------------------------------------------
// spectral invariants on random models

TEST(Invariants, ConjugationClosureAndWittenConstancy)
{
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 4; ++trial) {
        const int D = 1 + trial % 2;
        SdeModel m = models::diffusion(D, D == 1 ? 8 : 4, 0.3 + 0.2 * trial);
        m.drift = sts::testing::random_flow(D, 1, gen);
        const Spectrum s = full_spectrum(m);
        const double scale = std::max(1.0, spectral_radius(s));
        for (const auto& v : s) EXPECT_LE(conjugation_defect(v), 1e-8 * scale);
        const auto w = witten_index(s, {0.1, 1.0, 10.0});
        double lo = 1e300, hi = -1e300;
        for (cd x : w) {
            lo = std::min(lo, x.real());
            hi = std::max(hi, x.real());
        }
        EXPECT_LE(hi - lo, 1e-6 * (1.0 + max_abs_w(w)));
        EXPECT_TRUE(zero_modes(s, Tolerances{}).matches_betti);
    }
}

TEST(Invariants, LangevinRealNonnegative)
{
    for (double theta : {0.3, 1.0}) {
        const Spectrum s = full_spectrum(models::langevin_double(1, 16, theta, 0.5));
        const LangevinOracle o = langevin_oracle(models::double_well_potential(1, 0.5), theta, 16);
        EXPECT_GT(o.compared, 10);
        EXPECT_LE(o.max_imag_ratio, 1e-8);
        EXPECT_LE(o.max_mismatch, 1e-8);
        for (const auto& v : s) EXPECT_GE(v.real().minCoeff(), -1e-8 * spectral_radius(s));
    }
}

// ---------------------------------------------------------------------------------------------
// pipeline

TEST(Pipeline, DenseWithConvergence)
{
    const SdeModel m = models::langevin_cos(1, 12, 0.5);
    SpectralRequest req;
    req.check_convergence = true;
    const SpectralRun run =
        run_spectrum([&](int N) { return seo_blocks(models::with_truncation(m, N)); }, m.layout, req);
    EXPECT_EQ(run.mode, "dense");
    EXPECT_EQ(run.convergence_method, "dense re-solve at N+2");
    EXPECT_EQ(run.cls.phase, SusyPhase::unbroken);
    EXPECT_TRUE(run.converged[1][0]);
}

TEST(Pipeline, PartialModeRefinesGround)
{
    const SdeModel m = models::shear_2d(6, 0.3);
    SpectralRequest req;
    req.check_convergence = true;
    req.dense_limit = 100;
    const SpectralRun run =
        run_spectrum([&](int N) { return seo_blocks(models::with_truncation(m, N)); }, m.layout, req);
    EXPECT_EQ(run.mode, "partial");
    EXPECT_EQ(run.convergence_method, "ground refinement at N+2");
    EXPECT_EQ(run.cls.phase, SusyPhase::unbroken);
    req.need_full = true;
    EXPECT_THROW(run_spectrum([&](int N) { return seo_blocks(models::with_truncation(m, N)); }, m.layout, req), Error);
}

TEST(Distances, HausdorffAndMultiset)
{
    DenseVector a(3), b(3);
    a << cd(0, 0), cd(1, 1), cd(1, -1);
    b << cd(1, -1), cd(0, 0), cd(1, 1.5);
    EXPECT_NEAR(hausdorff_distance(a, b), 0.5, 1e-15);
    EXPECT_NEAR(multiset_distance(a, b), 0.5, 1e-15);
    DenseVector c(2);
    c << cd(0, 0), cd(0, 0);
    DenseVector d(2);
    d << cd(0, 0), cd(1, 0);
    EXPECT_EQ(hausdorff_distance(c, d), 1.0);
    EXPECT_NEAR(conjugation_defect(a), 0.0, 1e-15);
}
