#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sts/config.hpp"
#include "sts/pipeline.hpp"
#include "sts/sde.hpp"

namespace sts::cli {

inline constexpr const char* tool_version = "1.0.0";

enum ExitCode { exit_ok = 0, exit_internal = 1, exit_config = 2, exit_nonconvergence = 3, exit_check = 4 };

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> truncation;
    std::optional<double> theta;
    std::optional<double> alpha;
    std::optional<std::vector<double>> t_grid;
    bool check_convergence = false;
    std::optional<std::vector<double>> sweep_theta;
    std::optional<std::string> sweep_param;
    std::optional<std::vector<double>> sweep_values;
};

inline ModelConfig apply_overrides(ModelConfig c, const Overrides& o)
{
    if (o.out) c.output_dir = *o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.truncation) c.truncation = *o.truncation;
    if (o.theta) c.theta = *o.theta;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.t_grid) c.t_grid = *o.t_grid;
    if (o.check_convergence) c.check_convergence = true;
    if (o.sweep_theta) c.sweep.theta = *o.sweep_theta;
    if (o.sweep_param) c.sweep.param = *o.sweep_param;
    if (o.sweep_values) c.sweep.param_values = *o.sweep_values;
    // round-trip through JSON so that overrides get the same validation as file input
    return from_json(to_json(c));
}

// ---------------------------------------------------------------------------------------------
// Output helpers

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
};

class Report {
public:
    Report(std::string command, const ModelConfig& c) : command_(std::move(command)), config_(c) {}

    void check(const std::string& name, double value, double limit)
    {
        checks_.push_back({name, value <= limit, value, limit});
    }
    void require_true(const std::string& name, bool ok) { checks_.push_back({name, ok, ok ? 1.0 : 0.0, 1.0}); }
    bool checks_passed() const
    {
        for (const auto& c : checks_)
            if (!c.passed) return false;
        return true;
    }
    Json& payload() { return payload_; }
    void time(const std::string& phase, double seconds) { timing_[phase] = seconds; }
    void nonconverged(const std::string& why) { nonconverged_ = why; }
    const std::optional<std::string>& nonconvergence() const { return nonconverged_; }

    Json document() const
    {
        Json checks = Json::array();
        for (const auto& c : checks_)
            checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit}});
        Json d{{"tool", "sts"},
               {"version", tool_version},
               {"command", command_},
               {"config", to_json(config_)},
               {"tolerances",
                {{"tol_zero", config_.tol.tol_zero},
                 {"tol_pair", config_.tol.tol_pair},
                 {"tol_converge", config_.tol.tol_converge}}},
               {"result", payload_},
               {"checks", checks},
               {"passed", checks_passed() && !nonconverged_}};
        if (nonconverged_) d["nonconvergence"] = *nonconverged_;
        return d;
    }
    Json timing() const { return Json{{"command", command_}, {"seconds", timing_}}; }

private:
    std::string command_;
    ModelConfig config_;
    std::vector<Check> checks_;
    Json payload_ = Json::object();
    std::map<std::string, double> timing_;
    std::optional<std::string> nonconverged_;
};

class Stopwatch {
public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::config, "cannot write " + p.string());
    f << text;
}

/// RFC-4180 style CSV with CRLF line ends.
class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row(header); }
    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            const bool quote = cells[i].find_first_of(",\"\r\n") != std::string::npos;
            if (!quote) {
                out_ << cells[i];
                continue;
            }
            out_ << '"';
            for (char ch : cells[i]) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
            out_ << '"';
        }
        out_ << "\r\n";
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline std::string converged_label(const SpectralRun& run, std::size_t k, Eigen::Index i)
{
    if (run.converged.empty() || !run.checked[k][static_cast<std::size_t>(i)]) return "unchecked";
    return run.converged[k][static_cast<std::size_t>(i)] ? "true" : "false";
}

inline std::string eigen_csv(const SpectralRun& run)
{
    Csv csv({"degree", "index", "re", "im", "converged"});
    for (std::size_t k = 0; k < run.values.size(); ++k)
        for (Eigen::Index i = 0; i < run.values[k].size(); ++i)
            csv.row({std::to_string(k), std::to_string(i), fmt(run.values[k][i].real()), fmt(run.values[k][i].imag()),
                     converged_label(run, k, i)});
    return csv.str();
}

inline Json complex_json(cd z) { return Json::array({z.real(), z.imag()}); }

inline Json classification_json(const Classification& c)
{
    Json j{{"classification", to_string(c.phase)},
           {"convergence_checked", c.convergence_checked},
           {"ground_converged", c.ground_converged},
           {"scale", c.scale},
           {"diagnostics", c.diagnostics}};
    if (c.ground.degree >= 0)
        j["ground"] = {{"degree", c.ground.degree}, {"index", c.ground.index}, {"value", complex_json(c.ground.value)}};
    return j;
}

inline Json spectral_json(const SpectralRun& run, const Tolerances& tol)
{
    Json degrees = Json::array();
    for (std::size_t k = 0; k < run.values.size(); ++k) {
        Json vals = Json::array(), conv = Json::array();
        for (Eigen::Index i = 0; i < run.values[k].size(); ++i) {
            vals.push_back(complex_json(run.values[k][i]));
            conv.push_back(converged_label(run, k, i));
        }
        degrees.push_back({{"degree", k}, {"count", run.values[k].size()}, {"eigenvalues", vals}, {"converged", conv}});
    }
    Json j{{"mode", run.mode},
           {"truncation", run.truncation},
           {"convergence_method", run.convergence_method},
           {"spectra", degrees},
           {"classification", classification_json(run.cls)}};
    if (run.mode == "dense") {
        const ZeroModeReport z = zero_modes(run.values, tol);
        j["zero_modes"] = {{"counts", z.counts}, {"betti", z.betti}, {"matches_betti", z.matches_betti}};
    }
    return j;
}

// ---------------------------------------------------------------------------------------------
// Commands

struct Context {
    ModelConfig config;
    std::filesystem::path out;
    Report report;
    Stopwatch clock;
};

inline SpectralRequest request_for(const ModelConfig& c, bool check, bool vectors, bool full)
{
    SpectralRequest r;
    r.check_convergence = check;
    r.vectors = vectors;
    r.need_full = full;
    r.dense_limit = static_cast<std::size_t>(c.dense_limit);
    r.tol = c.tol;
    return r;
}

inline SpectralRun model_spectrum(Context& ctx, bool check, bool vectors, bool full)
{
    const ModelConfig& c = ctx.config;
    const SpectralRun run = run_spectrum([&](int N) { return build_blocks(c, N); },
                                         BasisLayout(c.dimension, c.truncation), request_for(c, check, vectors, full));
    ctx.report.time("spectrum", ctx.clock.lap());
    write_text(ctx.out / "eigenvalues.csv", eigen_csv(run));
    for (std::size_t k = 0; k < run.values.size(); ++k) {
        Csv plot({"re", "im"});
        for (Eigen::Index i = 0; i < run.values[k].size(); ++i)
            plot.row({fmt(run.values[k][i].real()), fmt(run.values[k][i].imag())});
        write_text(ctx.out / ("spectrum_k" + std::to_string(k) + ".csv"), plot.str());
    }
    ctx.report.payload()["spectral"] = spectral_json(run, c.tol);
    if (run.cls.convergence_checked && !run.cls.ground_converged)
        ctx.report.nonconverged("ground eigenvalue not converged: " + run.cls.diagnostics);
    else if (run.cls.convergence_checked && run.cls.phase == SusyPhase::indeterminate)
        ctx.report.nonconverged("classification indeterminate: " + run.cls.diagnostics);
    return run;
}

inline void cmd_spectrum(Context& ctx)
{
    const SpectralRun run = model_spectrum(ctx, ctx.config.check_convergence, false, false);
    if (run.mode == "dense") {
        double worst = 0.0;
        for (const auto& v : run.values) worst = std::max(worst, conjugation_defect(v));
        ctx.report.check("conjugation_closure", worst, 1e-8 * run.scale);
    }
}

inline void cmd_classify(Context& ctx) { model_spectrum(ctx, true, false, false); }

inline void cmd_witten(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    const SpectralRun run = model_spectrum(ctx, c.check_convergence, false, true);
    const auto W = witten_index(run.values, c.t_grid);
    const auto Z = partition_function(run.values, c.t_grid);
    Json wj = Json::array(), zj = Json::array();
    Csv wc({"t", "W"}), zc({"t", "Z"});
    double wmax = 0.0, wlo = std::numeric_limits<double>::infinity(), whi = -wlo;
    for (std::size_t i = 0; i < W.size(); ++i) {
        wj.push_back({{"t", c.t_grid[i]}, {"value", complex_json(W[i])}});
        zj.push_back({{"t", c.t_grid[i]}, {"value", complex_json(Z[i])}});
        wc.row({fmt(c.t_grid[i]), fmt(W[i].real())});
        zc.row({fmt(c.t_grid[i]), fmt(Z[i].real())});
        wmax = std::max(wmax, std::abs(W[i]));
        wlo = std::min(wlo, W[i].real());
        whi = std::max(whi, W[i].real());
    }
    write_text(ctx.out / "witten.csv", wc.str());
    write_text(ctx.out / "partition.csv", zc.str());
    ctx.report.payload()["witten"] = wj;
    ctx.report.payload()["partition"] = zj;
    // the torus has Euler characteristic 0
    ctx.report.check("witten_index_zero", wmax, 1e-6);
    ctx.report.check("witten_t_independent", whi - wlo, 1e-6 * (1.0 + wmax));
    const cd g = run.cls.ground.value;
    if (run.cls.ground.degree >= 0 && g.real() < -c.tol.tol_zero * run.scale) {
        const SlopeFit fit = partition_slope(run.values, g);
        ctx.report.payload()["partition_slope"] = {
            {"slope", fit.slope}, {"expected", -g.real()}, {"t_begin", fit.t_begin}, {"t_end", fit.t_end}};
        ctx.report.check("partition_slope_relative_error", std::abs(fit.slope + g.real()) / std::abs(g.real()), 0.05);
    }
}

inline void cmd_pair(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    const SpectralRun run = model_spectrum(ctx, c.check_convergence, true, true);
    const PairingReport p = pairing_check(run.systems, build_blocks(c, c.truncation), c.tol);
    ctx.report.time("pairing", ctx.clock.lap());
    Csv csv({"degree", "index", "re", "im", "partner_degree", "residual", "ok"});
    Json entries = Json::array();
    for (const auto& e : p.entries) {
        csv.row({std::to_string(e.degree), std::to_string(e.index), fmt(e.value.real()), fmt(e.value.imag()),
                 std::to_string(e.partner_degree), fmt(e.residual), e.ok ? "true" : "false"});
        entries.push_back({{"degree", e.degree},
                           {"index", e.index},
                           {"partner_degree", e.partner_degree},
                           {"residual", e.residual},
                           {"ok", e.ok}});
    }
    write_text(ctx.out / "pairing.csv", csv.str());
    ctx.report.payload()["pairing"] = {{"entries", entries},
                                       {"even_odd_distance", p.even_odd_distance},
                                       {"violations", p.violations},
                                       {"cluster_matched", p.cluster_matched}};
    ctx.report.check("pairing_violations", p.violations, 0.0);
    ctx.report.check("even_odd_distance", p.even_odd_distance, c.tol.tol_pair);
}

inline Scheme scheme_for(const ModelConfig& c)
{
    if (c.alpha == 0.5) return Scheme::stratonovich;
    if (c.alpha == 0.0) return Scheme::ito;
    fail(ErrorKind::config, "trajectory simulation supports alpha = 0 (Ito) or alpha = 0.5 (Stratonovich) only");
}

inline std::string density_csv(const std::vector<double>& rho, int D, int bins)
{
    std::vector<std::string> header;
    for (int j = 0; j < D; ++j) header.push_back("x" + std::to_string(j + 1));
    header.push_back("density");
    Csv csv(header);
    const double h = two_pi / bins;
    for (std::size_t cell = 0; cell < rho.size(); ++cell) {
        std::vector<std::string> row;
        std::size_t r = cell;
        for (int j = 0; j < D; ++j) {
            row.push_back(fmt((static_cast<double>(r % static_cast<std::size_t>(bins)) + 0.5) * h));
            r /= static_cast<std::size_t>(bins);
        }
        row.push_back(fmt(rho[cell]));
        csv.row(row);
    }
    return csv.str();
}

inline void cmd_evolve(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    const auto& s = c.simulation;
    const Scheme scheme = scheme_for(c);
    const int D = c.dimension;
    const int bins = s.bins > 0 ? s.bins : default_bins(D);
    const SdeModel m = build_model(c, c.truncation);
    const OperatorBlock H = build_blocks(c, c.truncation)[D];
    require(H.matrix.rows() <= static_cast<Eigen::Index>(c.dense_limit), ErrorKind::config,
            "top-degree block exceeds the dense limit; lower the truncation");
    const FormVector psi = operator_evolve_density(H, uniform_density(m.layout), s.time);
    ctx.report.time("operator_evolution", ctx.clock.lap());
    const long steps = std::lround(s.time / s.dt);
    InitialCondition init;
    init.uniform = true;
    const auto states = ensemble_states(m, init, s.dt, steps, static_cast<std::size_t>(s.trajectories), RngSpec{c.seed},
                                        scheme);
    ctx.report.time("monte_carlo", ctx.clock.lap());
    const EnsembleDensity e = ensemble_density(states, D, bins);
    const std::vector<double> op = bin_averages(psi, bins);
    const double l1 = l1_distance(e, op);
    write_text(ctx.out / "density_mc.csv", density_csv(e.density, D, bins));
    write_text(ctx.out / "density_operator.csv", density_csv(op, D, bins));
    ctx.report.payload()["evolve"] = {{"time", s.time},
                                      {"steps", steps},
                                      {"trajectories", s.trajectories},
                                      {"bins", bins},
                                      {"scheme", scheme == Scheme::ito ? "ito" : "stratonovich"},
                                      {"l1_distance", l1},
                                      {"probability", integrate_top(psi).real()}};
    ctx.report.check("density_l1", l1, s.l1_tolerance);
}

inline void cmd_mc_compare(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    const auto& s = c.simulation;
    const SpectralRun run = model_spectrum(ctx, true, true, true);
    const GroundState g = run.cls.ground;
    const TrigField f = observable_field(c);
    const EigenSystem& es = run.systems[static_cast<std::size_t>(g.degree)];
    const cd op_mean = expectation(f, es, g.index);
    const auto op_corr = correlator(f, f, s.lags, es, g.index);
    const SdeModel m = build_model(c, c.truncation);
    McOptions o;
    o.trajectories = static_cast<std::size_t>(s.batches);
    o.dt = s.dt;
    o.burn_in = s.burn_in;
    o.duration = s.duration;
    o.scheme = scheme_for(c);
    const McAutocorrelation mc = mc_autocorrelation(m, f, s.lags, o, RngSpec{c.seed});
    ctx.report.time("monte_carlo", ctx.clock.lap());
    Json lags = Json::array();
    Csv csv({"lag", "operator", "monte_carlo", "stderr"});
    ctx.report.check("expectation_deviation", std::abs(op_mean.real() - mc.mean.mean),
                     3.0 * mc.mean.stderr_ + s.bias_allowance);
    for (std::size_t i = 0; i < s.lags.size(); ++i) {
        lags.push_back({{"lag", mc.lags[i]},
                        {"operator", complex_json(op_corr[i])},
                        {"monte_carlo", mc.raw[i].mean},
                        {"stderr", mc.raw[i].stderr_}});
        csv.row({fmt(mc.lags[i]), fmt(op_corr[i].real()), fmt(mc.raw[i].mean), fmt(mc.raw[i].stderr_)});
        ctx.report.check("correlator_deviation_lag_" + fmt(mc.lags[i]), std::abs(op_corr[i].real() - mc.raw[i].mean),
                         3.0 * mc.raw[i].stderr_ + s.bias_allowance);
    }
    write_text(ctx.out / "correlator.csv", csv.str());
    ctx.report.payload()["mc_compare"] = {{"operator_expectation", complex_json(op_mean)},
                                          {"mc_expectation", mc.mean.mean},
                                          {"mc_stderr", mc.mean.stderr_},
                                          {"correlator", lags}};
    ctx.report.check("expectation_imaginary_part", std::abs(op_mean.imag()), 1e-8);
}

/// Slowest-decaying nonzero degree-2 eigenvalue (min Re, then min |Im|).
inline std::optional<cd> dominant_nonzero(const DenseVector& v, double zero)
{
    std::optional<cd> best;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) <= zero) continue;
        if (!best || v[i].real() < best->real() - zero ||
            (std::abs(v[i].real() - best->real()) <= zero && std::abs(v[i].imag()) < std::abs(best->imag())))
            best = v[i];
    }
    return best;
}

inline void cmd_dynamo(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    require(c.preset == "abc", ErrorKind::config, "dynamo needs the 'abc' preset");
    require(c.alpha == 0.5 && c.identity_noise, ErrorKind::config,
            "dynamo identifies the SEO with identity noise and Stratonovich interpretation");
    const double eta = c.theta;
    const FlowField v = build_model(c, 1).drift;
    // identity check on a small truncation: kd_operator against the degree-2 SEO block
    {
        const int Nc = std::min(c.truncation, 3);
        const BasisLayout l(3, Nc);
        const SeoBlocks kd = kd_operator(v, eta, l);
        const SeoBlocks h = seo_blocks(build_model(c, Nc));
        ctx.report.check("kd_equals_seo_degree2", max_abs((kd[2] - h[2]).matrix), 1e-12);
    }
    auto kd_builder = [&](int N) { return kd_operator(v, eta, BasisLayout(3, N)); };
    const SpectralRun run = run_spectrum(kd_builder, BasisLayout(3, c.truncation), request_for(c, true, false, false));
    ctx.report.time("spectrum", ctx.clock.lap());
    write_text(ctx.out / "eigenvalues.csv", eigen_csv(run));
    ctx.report.payload()["spectral"] = spectral_json(run, c.tol);
    if (!run.cls.ground_converged)
        ctx.report.nonconverged("ground eigenvalue not converged: " + run.cls.diagnostics);
    else if (run.cls.phase == SusyPhase::indeterminate)
        ctx.report.nonconverged("classification indeterminate: " + run.cls.diagnostics);

    const BasisLayout l(3, c.truncation);
    const FormVector B0 = random_exact_two_form(l, c.dynamo.initial_band, c.seed);
    const long steps = std::lround(c.dynamo.duration / c.dynamo.dt);
    const InductionResult ir = induction_timestep_oracle(v, eta, B0, c.dynamo.dt, steps);
    ctx.report.time("time_stepping", ctx.clock.lap());
    Csv growth({"t", "log_norm"});
    for (std::size_t i = 0; i < ir.times.size(); ++i) growth.row({fmt(ir.times[i]), fmt(ir.log_norm[i])});
    write_text(ctx.out / "growth.csv", growth.str());

    const auto dom = dominant_nonzero(run.values[2], c.tol.tol_zero * run.scale);
    require(dom.has_value(), ErrorKind::numerical, "no nonzero degree-2 eigenvalue found");
    const double gamma = -dom->real(), omega = std::abs(dom->imag());
    Json oracle{{"gamma", ir.gamma},
                {"omega", ir.omega},
                {"norm_slope", ir.norm_slope},
                {"eigen_gamma", gamma},
                {"eigen_omega", omega}};
    ctx.report.payload()["oracle"] = oracle;
    ctx.report.check("growth_rate_relative_error", std::abs(ir.gamma - gamma) / std::max(std::abs(gamma), 1e-300),
                     c.dynamo.growth_tolerance);
    if (omega > c.tol.tol_zero * run.scale)
        ctx.report.check("frequency_relative_error", std::abs(ir.omega - omega) / omega, c.dynamo.frequency_tolerance);
}

inline void cmd_langevin_check(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    const auto u = potential_of(c);
    require(u.has_value(), ErrorKind::config, "langevin-check needs a langevin preset");
    require(c.identity_noise && c.theta > 0.0, ErrorKind::config,
            "langevin-check needs identity noise and positive temperature");
    const SpectralRun run = model_spectrum(ctx, true, false, true);
    const LangevinOracle o = langevin_oracle(*u, c.theta, c.truncation);
    ctx.report.time("oracle", ctx.clock.lap());
    ctx.report.payload()["langevin"] = {
        {"max_imag_ratio", o.max_imag_ratio}, {"max_mismatch", o.max_mismatch}, {"compared", o.compared}, {"skipped", o.skipped}};
    ctx.report.check("imaginary_parts", o.max_imag_ratio, 1e-8);
    ctx.report.check("hermitian_mismatch", o.max_mismatch, 1e-8);
    ctx.report.require_true("compared_some_eigenvalues", o.compared > 0);
    ctx.report.require_true("classification_unbroken", run.cls.phase == SusyPhase::unbroken);
}

struct SweepCell {
    double theta = 0.0, param = 0.0;
    Classification cls;
    std::string error;
};

inline void cmd_sweep(Context& ctx)
{
    const ModelConfig& c = ctx.config;
    std::vector<SweepCell> cells;
    for (double th : c.sweep.theta)
        for (double p : c.sweep.param_values) cells.push_back({th, p, {}, {}});
    parallel_for(cells.size(), [&](std::size_t i) {
        SweepCell& cell = cells[i];
        try {
            ModelConfig cc = with_param(c, c.sweep.param, cell.param);
            cc.theta = cell.theta;
            validate(cc);
            const SpectralRun run = run_spectrum([&](int N) { return build_blocks(cc, N); },
                                                 BasisLayout(cc.dimension, cc.truncation),
                                                 request_for(cc, true, false, false));
            cell.cls = run.cls;
        } catch (const std::exception& e) {
            cell.error = e.what();
            cell.cls.diagnostics = e.what();
        }
    });
    ctx.report.time("sweep", ctx.clock.lap());
    Csv csv({"param1", "param2", "classification", "Re_Eg", "Im_Eg", "converged"});
    Json rows = Json::array();
    std::map<std::string, int> counts;
    for (const auto& cell : cells) {
        const bool has = cell.cls.ground.degree >= 0;
        const std::string cls = to_string(cell.cls.phase);
        ++counts[cls];
        csv.row({fmt(cell.theta), fmt(cell.param), cls, has ? fmt(cell.cls.ground.value.real()) : "",
                 has ? fmt(cell.cls.ground.value.imag()) : "", cell.cls.ground_converged ? "true" : "false"});
        Json r{{"theta", cell.theta},
               {"param", cell.param},
               {"classification", cls},
               {"converged", cell.cls.ground_converged},
               {"diagnostics", cell.cls.diagnostics}};
        if (has) r["ground"] = complex_json(cell.cls.ground.value);
        rows.push_back(r);
    }
    write_text(ctx.out / "sweep.csv", csv.str());
    ctx.report.payload()["sweep"] = {{"param1", "theta"}, {"param2", c.sweep.param}, {"cells", rows}, {"counts", counts}};
}

inline const std::map<std::string, std::function<void(Context&)>>& commands()
{
    static const std::map<std::string, std::function<void(Context&)>> m{
        {"spectrum", cmd_spectrum}, {"classify", cmd_classify},   {"witten", cmd_witten},
        {"pair", cmd_pair},         {"evolve", cmd_evolve},       {"mc-compare", cmd_mc_compare},
        {"dynamo", cmd_dynamo},     {"langevin-check", cmd_langevin_check}, {"sweep", cmd_sweep}};
    return m;
}

/// Runs one command; returns the exit code.  Messages go to `err`.
inline int run_command(const std::string& command, const std::string& config_path, const Overrides& ov,
                       std::ostream& err)
{
    try {
        auto it = commands().find(command);
        require(it != commands().end(), ErrorKind::config, "unknown command '" + command + "'");
        std::ifstream in(config_path, std::ios::binary);
        require(static_cast<bool>(in), ErrorKind::config, "cannot read config file " + config_path);
        std::stringstream text;
        text << in.rdbuf();
        const ModelConfig cfg = apply_overrides(parse_config(text.str()), ov);
        Context ctx{cfg, std::filesystem::path(cfg.output_dir), Report(command, cfg), Stopwatch{}};
        std::filesystem::create_directories(ctx.out);
        it->second(ctx);
        write_text(ctx.out / "report.json", ctx.report.document().dump(2) + "\n");
        write_text(ctx.out / "timing.json", ctx.report.timing().dump(2) + "\n");
        if (!ctx.report.checks_passed()) {
            err << "sts: one or more checks failed (see " << (ctx.out / "report.json").string() << ")\n";
            return exit_check;
        }
        if (ctx.report.nonconvergence()) {
            err << "sts: " << *ctx.report.nonconvergence() << "\n";
            return exit_nonconvergence;
        }
        return exit_ok;
    } catch (const Error& e) {
        err << "sts: " << e.what() << "\n";
        switch (e.kind()) {
        case ErrorKind::config:
        case ErrorKind::domain:
        case ErrorKind::degree: return exit_config;
        case ErrorKind::numerical: return exit_nonconvergence;
        case ErrorKind::check: return exit_check;
        }
        return exit_internal;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "sts: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "sts: internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

}  // namespace sts::cli
