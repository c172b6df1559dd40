#include <gtest/gtest.h>

#include "sts/models.hpp"
#include "sts/sde.hpp"
#include "sts/spectral.hpp"
#include "test_helpers.hpp"

using namespace sts;

namespace {

/// Normalized bin averages of a 1D density given pointwise, composite Simpson inside each bin.
template <class F>
std::vector<double> bins_of(F rho, int bins)
{
    const int sub = 64;
    std::vector<double> out(static_cast<std::size_t>(bins));
    double mass = 0.0;
    for (int b = 0; b < bins; ++b) {
        double s = 0.0;
        for (int j = 0; j <= sub; ++j) {
            const double w = (j == 0 || j == sub) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            s += w * rho(two_pi * (b + double(j) / sub) / bins);
        }
        s /= 3.0 * sub;
        out[static_cast<std::size_t>(b)] = s;
        mass += s * two_pi / bins;
    }
    for (auto& v : out) v /= mass;
    return out;
}

double l1_bins(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s * two_pi / static_cast<double>(a.size());
}

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct)
{
    const RngSpec r{42};
    auto a = r.stream(3), b = r.stream(3), c = r.stream(4);
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
    EXPECT_NE(RngSpec{43}.stream(3)(), x);
}

TEST(FieldTerms, MatchesTrigField)
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (int D = 1; D <= 3; ++D) {
        const TrigField f = sts::testing::random_field(D, 2, gen);
        const FieldTerms ft(f);
        for (int trial = 0; trial < 20; ++trial) {
            Point x{u(gen), u(gen), u(gen)};
            Point g;
            const double v = ft.eval(x, g);
            const std::vector<double> xs(x.begin(), x.begin() + D);
            EXPECT_NEAR(v, f(xs), 1e-12);
            EXPECT_NEAR(ft(x), f(xs), 1e-12);
            for (int j = 0; j < D; ++j) EXPECT_NEAR(g[j], trig_diff(f, j)(xs), 1e-12);
        }
    }
    EXPECT_TRUE(FieldTerms(TrigField::constant(2, 3.0)).constant());
}

TEST(Integrate, ConstantDriftIsExact)
{
    SdeModel m = models::drift(2, 2, 0.0, {0.7, -1.3});
    std::mt19937_64 rng(0);
    for (Scheme s : {Scheme::ito, Scheme::stratonovich}) {
        const Trajectory tr = integrate(m, {1.0, 2.0, 0.0}, 0.01, 1000, rng, s, 100);
        EXPECT_NEAR(tr.displacement[0], 7.0, 1e-10);
        EXPECT_NEAR(tr.displacement[1], -13.0, 1e-10);
        EXPECT_EQ(tr.times.size(), 11u);
        EXPECT_NEAR(tr.states.back()[0], wrap_angle(8.0), 1e-10);
    }
}

TEST(Integrate, DiffusionVarianceLaw)
{
    const double theta = 0.7, t = 1.0;
    const SdeModel m = models::diffusion(1, 2, theta);
    const int n = 4000;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto rng = RngSpec{5}.stream(static_cast<std::uint64_t>(i));
        const double d = integrate_ito(m, {0.0, 0.0, 0.0}, 0.01, 100, rng).displacement[0];
        s2 += d * d;
    }
    const double var = s2 / n, expected = 2.0 * theta * t;
    EXPECT_NEAR(var, expected, 4.0 * expected * std::sqrt(2.0 / n));
}

TEST(Integrate, SchemesAgreeForAdditiveNoise)
{
    const SdeModel m = models::diffusion(2, 2, 0.4);
    std::mt19937_64 a(9), b(9);
    const Trajectory x = integrate_ito(m, {0.3, 0.1, 0.0}, 0.01, 200, a);
    const Trajectory y = integrate_stratonovich(m, {0.3, 0.1, 0.0}, 0.01, 200, b);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(x.displacement[j], y.displacement[j], 1e-12);
}

TEST(Integrate, ItoWithoutNoiseIsEuler)
{
    SdeModel m = models::diffusion(1, 2, 0.0);
    m.drift[0] = TrigField::sine(1, {1, 0, 0}, -1.0);
    std::mt19937_64 rng(0);
    const Trajectory tr = integrate_ito(m, {1.0, 0.0, 0.0}, 0.05, 1, rng);
    EXPECT_NEAR(tr.displacement[0], -0.05 * std::sin(1.0), 1e-15);
}

TEST(Integrate, NonFiniteStateAborts)
{
    const SdeModel m = models::diffusion(1, 2, 0.5);
    std::mt19937_64 rng(0);
    try {
        integrate_ito(m, {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0}, 0.01, 10, rng);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
    }
}

TEST(Integrate, TimeStepLimit)
{
    const SdeModel m = models::langevin_cos(1, 8, 0.5);
    std::mt19937_64 rng(0);
    try {
        integrate_ito(m, {0.0, 0.0, 0.0}, 1.0, 10, rng);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
    EXPECT_THROW(ensemble_states(m, {}, 1.0, 1, 4, RngSpec{}, Scheme::ito), Error);
}

TEST(Ensemble, DeterministicAcrossRuns)
{
    const SdeModel m = models::shear_2d(2, 0.3);
    const InitialCondition ic{{0.0, 0.0, 0.0}, true};
    const auto a = ensemble_states(m, ic, 0.01, 50, 257, RngSpec{11}, Scheme::stratonovich);
    const auto b = ensemble_states(m, ic, 0.01, 50, 257, RngSpec{11}, Scheme::stratonovich);
    EXPECT_EQ(a, b);
}

TEST(Density, UniformAndDelta)
{
    std::vector<Point> grid;
    for (int i = 0; i < 64; ++i) grid.push_back({two_pi * (i + 0.5) / 64.0, 0.0, 0.0});
    const EnsembleDensity u = ensemble_density(grid, 1, 64);
    for (double v : u.density) EXPECT_NEAR(v, 1.0 / two_pi, 1e-12);
    EXPECT_NEAR(u.total(), 1.0, 1e-12);
    EXPECT_NEAR(l1_distance(u, bin_averages(uniform_density(BasisLayout(1, 3)), 64)), 0.0, 1e-12);

    const std::vector<Point> delta(100, Point{1.0, 2.0, 0.0});
    const EnsembleDensity d = ensemble_density(delta, 2, 32);
    EXPECT_NEAR(d.total(), 1.0, 1e-12);
    int occupied = 0;
    for (double v : d.density)
        if (v > 0.0) {
            ++occupied;
            EXPECT_NEAR(v, 1.0 / d.cell_volume(), 1e-9);
        }
    EXPECT_EQ(occupied, 1);
    EXPECT_THROW(ensemble_density({}, 1), Error);
}

TEST(Density, BinAveragesOfCosine)
{
    // bin average of 1 + cos x over [a, b] is 1 + (sin b - sin a) / (b - a)
    TrigField rho = TrigField::constant(1, 1.0) + TrigField::cosine(1, {1, 0, 0});
    const auto b = bin_averages(rho, 16);
    for (int i = 0; i < 16; ++i) {
        const double lo = two_pi * i / 16.0, hi = two_pi * (i + 1) / 16.0;
        EXPECT_NEAR(b[static_cast<std::size_t>(i)], 1.0 + (std::sin(hi) - std::sin(lo)) / (hi - lo), 1e-12);
    }
}

TEST(OperatorEvolution, DiffusionDecay)
{
    const double theta = 0.6, t = 0.8;
    const SdeModel m = models::diffusion(1, 4, theta);
    const SeoBlocks blocks = seo_blocks(m);
    const OperatorBlock& H = blocks[1];
    FormVector psi0 = uniform_density(m.layout);
    psi0.at(m.layout.full_index(), {1, 0, 0}) = 0.05;
    psi0.at(m.layout.full_index(), {-1, 0, 0}) = 0.05;
    const FormVector psi = operator_evolve_density(H, psi0, t);
    EXPECT_NEAR(std::abs(psi.at(m.layout.full_index(), {1, 0, 0}) - 0.05 * std::exp(-theta * t)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(integrate_top(psi) - 1.0), 0.0, 1e-12);
    EXPECT_EQ(operator_evolve_density(H, psi0, 0.0).coeffs, psi0.coeffs);
    EXPECT_THROW(operator_evolve_density(H, psi0, -1.0), Error);
}

TEST(OperatorEvolution, StationaryGibbsDensity)
{
    const double theta = 0.5;
    const SdeModel m = models::langevin_cos(1, 16, theta);
    const FormVector z = stationary_density(seo_blocks(m)[1]);
    const auto got = bin_averages(z, 64);
    const auto want = bins_of([&](double x) { return std::exp(-std::cos(x) / theta); }, 64);
    EXPECT_LT(l1_bins(got, want), 1e-8);
}

TEST(OperatorEvolution, MultiplicativeNoiseStationaryDensities)
{
    // zero-flux stationary solutions: 1/e^2 for Ito, 1/e for Stratonovich
    const double eps = 0.5;
    auto e = [&](double x) { return 1.0 + eps * std::cos(x); };
    SdeModel ito = models::multiplicative_1d(16, 0.5, eps, 0.0);
    SdeModel strat = models::multiplicative_1d(16, 0.5, eps, 0.5);
    const auto zi = bin_averages(stationary_density(seo_alpha(ito)[1]), 64);
    const auto zs = bin_averages(stationary_density(seo_alpha(strat)[1]), 64);
    EXPECT_LT(l1_bins(zi, bins_of([&](double x) { return 1.0 / (e(x) * e(x)); }, 64)), 1e-7);
    EXPECT_LT(l1_bins(zs, bins_of([&](double x) { return 1.0 / e(x); }, 64)), 1e-7);
}

TEST(Ensemble, MultiplicativeNoiseSelectsInterpretation)
{
    const double eps = 0.5;
    auto e = [&](double x) { return 1.0 + eps * std::cos(x); };
    const auto q_ito = bins_of([&](double x) { return 1.0 / (e(x) * e(x)); }, 64);
    const auto q_strat = bins_of([&](double x) { return 1.0 / e(x); }, 64);
    const SdeModel m = models::multiplicative_1d(8, 0.5, eps);
    const InitialCondition ic{{0.0, 0.0, 0.0}, true};
    auto dens = [&](Scheme s) {
        const auto st = ensemble_states(m, ic, 0.01, 1000, 40000, RngSpec{3}, s);
        const EnsembleDensity d = ensemble_density(st, 1, 64);
        return std::vector<double>(d.density.begin(), d.density.end());
    };
    const auto di = dens(Scheme::ito), ds = dens(Scheme::stratonovich);
    EXPECT_LT(l1_bins(di, q_ito), 0.08);
    EXPECT_GT(l1_bins(di, q_strat), 0.2);
    EXPECT_LT(l1_bins(ds, q_strat), 0.08);
    EXPECT_GT(l1_bins(ds, q_ito), 0.2);
}

TEST(Lyapunov, StableFixedPoint)
{
    SdeModel m = models::diffusion(1, 2, 0.0);
    m.drift[0] = TrigField::sine(1, {1, 0, 0}, -1.0);
    std::mt19937_64 rng(0);
    const auto l = lyapunov(m, {0.5, 0.0, 0.0}, 0.01, 20000, rng, 1);
    EXPECT_NEAR(l[0], -1.0, 0.02);
}

TEST(Lyapunov, ConstantDriftIsNeutral)
{
    const SdeModel m = models::drift(2, 2, 0.3, {0.4, 1.1});
    std::mt19937_64 rng(1);
    for (double v : lyapunov(m, {0.0, 0.0, 0.0}, 0.01, 2000, rng, 2)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Lyapunov, AbcFlowIsChaoticAndVolumePreserving)
{
    const SdeModel m = models::abc(2, 0.0, 1.0, 1.0, 1.0);
    std::mt19937_64 rng(2);
    const auto l = lyapunov(m, {0.1, 0.2, 0.3}, 0.01, 100000, rng, 3);
    EXPECT_GT(l[0], 0.02);
    EXPECT_NEAR(l[0] + l[1] + l[2], 0.0, 1e-3);
}

TEST(MonteCarlo, LangevinExpectation)
{
    const double theta = 0.5;
    const SdeModel m = models::langevin_cos(1, 16, theta);
    McOptions o;
    o.trajectories = 100;
    o.duration = 100.0;
    const McEstimate e = mc_expectation(m, TrigField::cosine(1, {1, 0, 0}), o, RngSpec{8});
    // Gibbs oracle: <cos x> = -I1(1/theta) / I0(1/theta)
    const double want = -std::cyl_bessel_i(1.0, 1.0 / theta) / std::cyl_bessel_i(0.0, 1.0 / theta);
    EXPECT_NEAR(e.mean, want, 4.0 * e.stderr_ + 2e-3);
    EXPECT_GT(e.stderr_, 0.0);
}

TEST(MonteCarlo, DiffusionAutocorrelation)
{
    const double theta = 0.5;
    const SdeModel m = models::diffusion(1, 2, theta);
    McOptions o;
    o.trajectories = 100;
    o.burn_in = 1.0;
    o.duration = 100.0;
    o.sample_every = 5;
    const auto c = mc_autocorrelation(m, TrigField::cosine(1, {1, 0, 0}), {0.0, 0.5, 2.0}, o, RngSpec{13});
    ASSERT_EQ(c.connected.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const double want = 0.5 * std::exp(-theta * c.lags[i]);
        EXPECT_NEAR(c.connected[i].mean, want, 4.0 * c.connected[i].stderr_ + 5e-3) << "lag " << c.lags[i];
    }
    EXPECT_THROW(mc_autocorrelation(m, TrigField::cosine(1, {1, 0, 0}), {500.0}, o, RngSpec{}), Error);
}

TEST(Induction, RandomExactTwoForm)
{
    const BasisLayout l(3, 3);
    const FormVector B = random_exact_two_form(l, 2, 4);
    EXPECT_GT(B.coeffs.norm(), 0.0);
    EXPECT_LT((d_matrix(l, 2).matrix * B.coeffs).norm(), 1e-12 * B.coeffs.norm());
    for (const MultiIndex& I : l.multi_indices(2)) EXPECT_EQ(B.at(I, {0, 0, 0}), cd(0.0));
    EXPECT_LT(B.reality_defect(), 1e-12);
}

TEST(Induction, ZeroFlowDecaysAtDiffusionRate)
{
    const double eta = 0.1;
    const BasisLayout l(3, 3);
    const InductionResult r =
        induction_timestep_oracle(FlowField(3), eta, random_exact_two_form(l, 1, 1), 0.05, 2000, 10);
    EXPECT_NEAR(r.gamma, -eta, 1e-6);
    EXPECT_NEAR(r.norm_slope, -eta, 1e-3);
}

TEST(Induction, AbcMatchesDenseSpectrum)
{
    const double eta = 0.1;
    const BasisLayout l(3, 4);
    const FlowField v = abc_flow(1.0, 1.0, 1.0);
    const DenseVector E = eigenvalues(kd_operator(v, eta, l)[2]);
    cd dom(std::numeric_limits<double>::infinity(), 0.0);
    for (Eigen::Index i = 0; i < E.size(); ++i)
        if (std::abs(E[i]) > 1e-8 && E[i].real() < dom.real()) dom = E[i];
    const InductionResult r = induction_timestep_oracle(v, eta, random_exact_two_form(l, 2, 7), 0.02, 15000, 10);
    EXPECT_NEAR(r.gamma, -dom.real(), 0.02 * std::abs(dom.real()) + 1e-6);
    EXPECT_NEAR(r.omega, std::abs(dom.imag()), 0.05 * std::abs(dom.imag()) + 1e-6);
}
