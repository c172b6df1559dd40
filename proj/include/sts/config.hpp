#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sts/models.hpp"
#include "sts/spectral.hpp"

namespace sts::cli {

using Json = nlohmann::json;

/// One coefficient of a vector field: component `axis` gets re + i im times e^{i k.x}.
struct Mode {
    int axis = 0;
    WaveVector k{0, 0, 0};
    double re = 0.0;
    double im = 0.0;
};

struct SimulationConfig {
    double dt = 0.005;
    double time = 1.0;
    std::uint64_t trajectories = 100000;
    int bins = 0;  ///< 0: 64 for D=1, 32 otherwise
    double l1_tolerance = 0.05;
    double burn_in = 10.0;
    double duration = 200.0;
    std::uint64_t batches = 200;
    std::vector<double> lags{0.0, 0.5, 1.0};
    double bias_allowance = 2e-3;
};

struct DynamoConfig {
    double growth_tolerance = 0.02;
    double frequency_tolerance = 0.05;
    double dt = 0.02;
    double duration = 300.0;
    int initial_band = 2;
};

struct SweepConfig {
    std::vector<double> theta;
    std::string param = "flow_scale";
    std::vector<double> param_values{1.0};
};

struct ModelConfig {
    int dimension = 1;
    int truncation = 4;
    double theta = 1.0;
    double alpha = 0.5;
    std::string preset = "diffusion";
    std::map<std::string, double> params;  ///< preset parameters (A, B, C, a, flow_scale)
    std::vector<double> velocity;          ///< drift preset
    std::vector<Mode> flow_modes;          ///< custom preset
    bool identity_noise = true;
    std::vector<std::vector<Mode>> noise_fields;
    std::vector<Mode> observable;  ///< mc-compare observable; default cos x1
    Tolerances tol;
    std::uint64_t seed = 0;
    std::string output_dir = "sts-out";
    std::vector<double> t_grid{0.1, 1.0, 10.0};
    bool check_convergence = false;
    std::uint64_t dense_limit = 3000;
    SimulationConfig simulation;
    DynamoConfig dynamo;
    SweepConfig sweep;
};

inline const std::vector<std::string>& presets()
{
    static const std::vector<std::string> p{"diffusion",    "drift", "langevin-cos", "langevin-double",
                                            "shear-2d", "abc",   "custom"};
    return p;
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what)
{
    fail(ErrorKind::config, "config error at '" + path + "': " + what);
}

inline void allow_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed)
{
    if (!j.is_object()) config_error(path, "expected an object");
    for (const auto& [key, v] : j.items())
        if (!allowed.count(key)) config_error(path + "." + key, "unknown key");
}

inline double number(const Json& j, const std::string& path)
{
    if (!j.is_number()) config_error(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) config_error(path, "expected a finite number");
    return v;
}

inline long long integer(const Json& j, const std::string& path)
{
    if (!j.is_number_integer()) config_error(path, "expected an integer");
    return j.get<long long>();
}

inline std::vector<double> numbers(const Json& j, const std::string& path)
{
    if (!j.is_array()) config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<Mode> modes(const Json& j, const std::string& path, int D)
{
    if (!j.is_array()) config_error(path, "expected an array of modes");
    std::vector<Mode> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        allow_keys(j[i], p, {"axis", "wavevector", "re", "im"});
        Mode m;
        if (!j[i].contains("axis") || !j[i].contains("wavevector")) config_error(p, "mode needs axis and wavevector");
        m.axis = static_cast<int>(integer(j[i]["axis"], p + ".axis"));
        if (m.axis < 0 || m.axis >= D) config_error(p + ".axis", "axis out of range for the dimension");
        const Json& w = j[i]["wavevector"];
        if (!w.is_array() || static_cast<int>(w.size()) != D)
            config_error(p + ".wavevector", "expected " + std::to_string(D) + " integers");
        for (int a = 0; a < D; ++a) m.k[a] = static_cast<int>(integer(w[a], p + ".wavevector"));
        if (j[i].contains("re")) m.re = number(j[i]["re"], p + ".re");
        if (j[i].contains("im")) m.im = number(j[i]["im"], p + ".im");
        out.push_back(m);
    }
    return out;
}

inline Json modes_json(const std::vector<Mode>& ms, int D)
{
    Json a = Json::array();
    for (const auto& m : ms) {
        Json w = Json::array();
        for (int i = 0; i < D; ++i) w.push_back(m.k[i]);
        a.push_back({{"axis", m.axis}, {"wavevector", w}, {"re", m.re}, {"im", m.im}});
    }
    return a;
}

inline FlowField field_from_modes(const std::vector<Mode>& ms, int D, const std::string& path)
{
    FlowField f(D);
    for (const auto& m : ms) f[m.axis].add(m.k, cd(m.re, m.im));
    if (!f.is_real(1e-12)) config_error(path, "field is not real (every mode k needs its conjugate at -k)");
    return f;
}

inline std::vector<double> grid_spec(const Json& j, const std::string& path)
{
    if (j.is_array()) return numbers(j, path);
    allow_keys(j, path, {"from", "to", "count"});
    if (!j.contains("from") || !j.contains("to") || !j.contains("count"))
        config_error(path, "grid needs from, to and count");
    const double a = number(j["from"], path + ".from"), b = number(j["to"], path + ".to");
    const long long n = integer(j["count"], path + ".count");
    if (n < 1) config_error(path + ".count", "count must be positive");
    std::vector<double> out;
    for (long long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
    return out;
}

}  // namespace detail

inline const std::set<std::string>& preset_params(const std::string& preset)
{
    static const std::map<std::string, std::set<std::string>> p{
        {"diffusion", {}},
        {"drift", {"flow_scale"}},
        {"langevin-cos", {"flow_scale"}},
        {"langevin-double", {"a", "flow_scale"}},
        {"shear-2d", {"flow_scale"}},
        {"abc", {"A", "B", "C", "flow_scale"}},
        {"custom", {"flow_scale"}}};
    return p.at(preset);
}

inline double param_or(const ModelConfig& c, const std::string& name, double fallback)
{
    auto it = c.params.find(name);
    return it == c.params.end() ? fallback : it->second;
}

/// Fills preset-parameter defaults so that they are echoed.
inline void apply_defaults(ModelConfig& c)
{
    const auto& allowed = preset_params(c.preset);
    if (allowed.count("flow_scale") && !c.params.count("flow_scale")) c.params["flow_scale"] = 1.0;
    if (c.preset == "abc")
        for (const char* n : {"A", "B", "C"})
            if (!c.params.count(n)) c.params[n] = 1.0;
    if (c.preset == "langevin-double" && !c.params.count("a")) c.params["a"] = 0.5;
    if (c.observable.empty()) {
        c.observable.push_back({0, {1, 0, 0}, 0.5, 0.0});
        c.observable.push_back({0, {-1, 0, 0}, 0.5, 0.0});
    }
    if (c.sweep.theta.empty()) c.sweep.theta = {c.theta};
}

inline void validate(const ModelConfig& c)
{
    using detail::config_error;
    if (c.dimension < 1 || c.dimension > 3) config_error("dimension", "must be 1, 2 or 3");
    if (c.truncation < 1 || c.truncation > 64) config_error("truncation", "must be in 1..64");
    if (!(c.theta >= 0.0)) config_error("theta", "must be nonnegative");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) config_error("alpha", "must lie in [0, 1]");
    bool known = false;
    for (const auto& p : presets()) known = known || p == c.preset;
    if (!known) config_error("flow.preset", "unknown preset '" + c.preset + "'");
    if (c.preset == "abc" && c.dimension != 3)
        config_error("flow.preset", "preset 'abc' is defined on T^3 only, got dimension " + std::to_string(c.dimension));
    if (c.preset == "shear-2d" && c.dimension != 2)
        config_error("flow.preset", "preset 'shear-2d' is defined on T^2 only, got dimension " +
                                        std::to_string(c.dimension));
    if (c.preset == "drift" && static_cast<int>(c.velocity.size()) != c.dimension)
        config_error("flow.velocity", "drift preset needs one velocity entry per axis");
    if (c.preset != "drift" && !c.velocity.empty()) config_error("flow.velocity", "only used by the drift preset");
    if (c.preset != "custom" && !c.flow_modes.empty()) config_error("flow.modes", "only used by the custom preset");
    const auto& allowed = preset_params(c.preset);
    for (const auto& [k, v] : c.params)
        if (!allowed.count(k)) config_error("flow.params." + k, "not a parameter of preset '" + c.preset + "'");
    if (c.theta > 0.0 && !c.identity_noise && c.noise_fields.empty())
        config_error("noise", "positive temperature needs at least one noise field");
    c.tol.validate();
    if (c.t_grid.empty()) config_error("t_grid", "must not be empty");
    for (double t : c.t_grid)
        if (!(t > 0.0)) config_error("t_grid", "times must be positive");
    const auto& s = c.simulation;
    if (!(s.dt > 0.0) || !(s.time >= 0.0) || s.trajectories < 1000 || s.bins < 0 || !(s.l1_tolerance > 0.0) ||
        !(s.burn_in >= 0.0) || !(s.duration > 0.0) || s.batches < 2 || !(s.bias_allowance >= 0.0))
        config_error("simulation", "invalid simulation settings (dt > 0, >= 1000 trajectories, >= 2 batches)");
    for (double l : s.lags)
        if (!(l >= 0.0 && l < s.duration)) config_error("simulation.lags", "lags must lie in [0, duration)");
    const auto& d = c.dynamo;
    if (!(d.growth_tolerance > 0.0) || !(d.frequency_tolerance > 0.0) || !(d.dt > 0.0) || !(d.duration > 0.0) ||
        d.initial_band < 1)
        config_error("dynamo", "invalid dynamo settings");
    if (c.sweep.param != "flow_scale" && !allowed.count(c.sweep.param))
        config_error("sweep.param", "'" + c.sweep.param + "' is not a parameter of preset '" + c.preset + "'");
    if (c.sweep.param == "flow_scale" && !allowed.count("flow_scale") && c.sweep.param_values != std::vector<double>{1.0})
        config_error("sweep.param", "preset '" + c.preset + "' has no flow to scale");
    if (c.sweep.theta.size() * c.sweep.param_values.size() > 1024) config_error("sweep", "grid exceeds 1024 cells");
    if (c.dense_limit < 16) config_error("dense_limit", "must be at least 16");
}

inline ModelConfig from_json(const Json& j)
{
    using namespace detail;
    allow_keys(j, "$", {"dimension", "truncation", "theta", "alpha", "flow", "noise", "tolerances", "seed", "output",
                        "t_grid", "check_convergence", "dense_limit", "simulation", "dynamo", "sweep", "observable"});
    ModelConfig c;
    for (const char* req : {"dimension", "truncation", "theta", "flow"})
        if (!j.contains(req)) config_error(std::string("$.") + req, "required key missing");
    c.dimension = static_cast<int>(integer(j["dimension"], "dimension"));
    if (c.dimension < 1 || c.dimension > 3) config_error("dimension", "must be 1, 2 or 3");
    const int D = c.dimension;
    c.truncation = static_cast<int>(integer(j["truncation"], "truncation"));
    c.theta = number(j["theta"], "theta");
    if (j.contains("alpha")) c.alpha = number(j["alpha"], "alpha");

    const Json& f = j["flow"];
    allow_keys(f, "flow", {"preset", "params", "velocity", "modes"});
    if (!f.contains("preset") || !f["preset"].is_string()) config_error("flow.preset", "expected a preset name");
    c.preset = f["preset"].get<std::string>();
    if (std::find(presets().begin(), presets().end(), c.preset) == presets().end())
        config_error("flow.preset", "unknown preset '" + c.preset + "'");
    if (f.contains("params")) {
        if (!f["params"].is_object()) config_error("flow.params", "expected an object");
        for (const auto& [k, v] : f["params"].items()) c.params[k] = number(v, "flow.params." + k);
    }
    if (f.contains("velocity")) c.velocity = numbers(f["velocity"], "flow.velocity");
    if (f.contains("modes")) c.flow_modes = modes(f["modes"], "flow.modes", D);

    if (j.contains("noise")) {
        const Json& n = j["noise"];
        if (n.is_string()) {
            if (n.get<std::string>() != "identity") config_error("noise", "expected \"identity\" or a field list");
        } else if (n.is_array()) {
            c.identity_noise = false;
            for (std::size_t a = 0; a < n.size(); ++a)
                c.noise_fields.push_back(modes(n[a], "noise[" + std::to_string(a) + "]", D));
        } else {
            config_error("noise", "expected \"identity\" or a field list");
        }
    }
    if (j.contains("tolerances")) {
        const Json& t = j["tolerances"];
        allow_keys(t, "tolerances", {"tol_zero", "tol_pair", "tol_converge"});
        if (t.contains("tol_zero")) c.tol.tol_zero = number(t["tol_zero"], "tolerances.tol_zero");
        if (t.contains("tol_pair")) c.tol.tol_pair = number(t["tol_pair"], "tolerances.tol_pair");
        if (t.contains("tol_converge")) c.tol.tol_converge = number(t["tol_converge"], "tolerances.tol_converge");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) config_error("seed", "expected a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output")) {
        allow_keys(j["output"], "output", {"dir"});
        if (j["output"].contains("dir")) {
            if (!j["output"]["dir"].is_string()) config_error("output.dir", "expected a string");
            c.output_dir = j["output"]["dir"].get<std::string>();
        }
    }
    if (j.contains("t_grid")) c.t_grid = numbers(j["t_grid"], "t_grid");
    if (j.contains("check_convergence")) {
        if (!j["check_convergence"].is_boolean()) config_error("check_convergence", "expected true or false");
        c.check_convergence = j["check_convergence"].get<bool>();
    }
    if (j.contains("dense_limit")) c.dense_limit = static_cast<std::uint64_t>(integer(j["dense_limit"], "dense_limit"));
    if (j.contains("simulation")) {
        const Json& s = j["simulation"];
        allow_keys(s, "simulation", {"dt", "time", "trajectories", "bins", "l1_tolerance", "burn_in", "duration",
                                     "batches", "lags", "bias_allowance"});
        auto& o = c.simulation;
        if (s.contains("dt")) o.dt = number(s["dt"], "simulation.dt");
        if (s.contains("time")) o.time = number(s["time"], "simulation.time");
        if (s.contains("trajectories"))
            o.trajectories = static_cast<std::uint64_t>(integer(s["trajectories"], "simulation.trajectories"));
        if (s.contains("bins")) o.bins = static_cast<int>(integer(s["bins"], "simulation.bins"));
        if (s.contains("l1_tolerance")) o.l1_tolerance = number(s["l1_tolerance"], "simulation.l1_tolerance");
        if (s.contains("burn_in")) o.burn_in = number(s["burn_in"], "simulation.burn_in");
        if (s.contains("duration")) o.duration = number(s["duration"], "simulation.duration");
        if (s.contains("batches")) o.batches = static_cast<std::uint64_t>(integer(s["batches"], "simulation.batches"));
        if (s.contains("lags")) o.lags = numbers(s["lags"], "simulation.lags");
        if (s.contains("bias_allowance")) o.bias_allowance = number(s["bias_allowance"], "simulation.bias_allowance");
    }
    if (j.contains("dynamo")) {
        const Json& s = j["dynamo"];
        allow_keys(s, "dynamo", {"growth_tolerance", "frequency_tolerance", "dt", "duration", "initial_band"});
        auto& o = c.dynamo;
        if (s.contains("growth_tolerance")) o.growth_tolerance = number(s["growth_tolerance"], "dynamo.growth_tolerance");
        if (s.contains("frequency_tolerance"))
            o.frequency_tolerance = number(s["frequency_tolerance"], "dynamo.frequency_tolerance");
        if (s.contains("dt")) o.dt = number(s["dt"], "dynamo.dt");
        if (s.contains("duration")) o.duration = number(s["duration"], "dynamo.duration");
        if (s.contains("initial_band")) o.initial_band = static_cast<int>(integer(s["initial_band"], "dynamo.initial_band"));
    }
    if (j.contains("sweep")) {
        const Json& s = j["sweep"];
        allow_keys(s, "sweep", {"theta", "param", "param_values"});
        if (s.contains("theta")) c.sweep.theta = grid_spec(s["theta"], "sweep.theta");
        if (s.contains("param")) {
            if (!s["param"].is_string()) config_error("sweep.param", "expected a parameter name");
            c.sweep.param = s["param"].get<std::string>();
        }
        if (s.contains("param_values")) c.sweep.param_values = grid_spec(s["param_values"], "sweep.param_values");
    }
    if (j.contains("observable")) c.observable = modes(j["observable"], "observable", D);
    apply_defaults(c);
    validate(c);
    return c;
}

/// Parses JSON text; syntax errors carry the byte offset, schema errors the field path.
inline ModelConfig parse_config(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::config, std::string("config syntax error: ") + e.what());
    }
    return from_json(j);
}

/// Canonical form with every default present; keys sorted.
inline Json to_json(const ModelConfig& c)
{
    const int D = c.dimension;
    Json flow = {{"preset", c.preset}};
    Json params = Json::object();
    for (const auto& [k, v] : c.params) params[k] = v;
    flow["params"] = params;
    if (c.preset == "drift") flow["velocity"] = c.velocity;
    if (c.preset == "custom") flow["modes"] = detail::modes_json(c.flow_modes, D);
    Json noise;
    if (c.identity_noise) {
        noise = "identity";
    } else {
        noise = Json::array();
        for (const auto& f : c.noise_fields) noise.push_back(detail::modes_json(f, D));
    }
    const auto& s = c.simulation;
    const auto& d = c.dynamo;
    return Json{{"dimension", c.dimension},
                {"truncation", c.truncation},
                {"theta", c.theta},
                {"alpha", c.alpha},
                {"flow", flow},
                {"noise", noise},
                {"tolerances",
                 {{"tol_zero", c.tol.tol_zero}, {"tol_pair", c.tol.tol_pair}, {"tol_converge", c.tol.tol_converge}}},
                {"seed", c.seed},
                {"output", {{"dir", c.output_dir}}},
                {"t_grid", c.t_grid},
                {"check_convergence", c.check_convergence},
                {"dense_limit", c.dense_limit},
                {"simulation",
                 {{"dt", s.dt},
                  {"time", s.time},
                  {"trajectories", s.trajectories},
                  {"bins", s.bins},
                  {"l1_tolerance", s.l1_tolerance},
                  {"burn_in", s.burn_in},
                  {"duration", s.duration},
                  {"batches", s.batches},
                  {"lags", s.lags},
                  {"bias_allowance", s.bias_allowance}}},
                {"dynamo",
                 {{"growth_tolerance", d.growth_tolerance},
                  {"frequency_tolerance", d.frequency_tolerance},
                  {"dt", d.dt},
                  {"duration", d.duration},
                  {"initial_band", d.initial_band}}},
                {"sweep", {{"theta", c.sweep.theta}, {"param", c.sweep.param}, {"param_values", c.sweep.param_values}}},
                {"observable", detail::modes_json(c.observable, D)}};
}

inline std::string emit_config(const ModelConfig& c) { return to_json(c).dump(2) + "\n"; }

// ---------------------------------------------------------------------------------------------
// Model construction

inline TrigField observable_field(const ModelConfig& c)
{
    TrigField f(c.dimension);
    for (const auto& m : c.observable) f.add(m.k, cd(m.re, m.im));
    if (!f.is_real(1e-12)) detail::config_error("observable", "observable is not real");
    return f;
}

inline std::optional<TrigField> potential_of(const ModelConfig& c)
{
    const double s = param_or(c, "flow_scale", 1.0);
    if (c.preset == "langevin-cos") return s * models::double_well_potential(c.dimension, 0.0);
    if (c.preset == "langevin-double") return s * models::double_well_potential(c.dimension, param_or(c, "a", 0.5));
    return std::nullopt;
}

/// The SDE described by the config at truncation N.
inline SdeModel build_model(const ModelConfig& c, int N)
{
    const int D = c.dimension;
    SdeModel m = models::diffusion(D, N, c.theta);
    m.alpha = c.alpha;
    const double s = param_or(c, "flow_scale", 1.0);
    if (c.preset == "drift") {
        m.drift = models::drift(D, N, c.theta, c.velocity).drift;
    } else if (auto u = potential_of(c)) {
        m.drift = gradient_flow(*u);
    } else if (c.preset == "shear-2d") {
        m.drift = models::shear_2d(N, c.theta).drift;
    } else if (c.preset == "abc") {
        m.drift = abc_flow(param_or(c, "A", 1.0), param_or(c, "B", 1.0), param_or(c, "C", 1.0));
    } else if (c.preset == "custom") {
        m.drift = detail::field_from_modes(c.flow_modes, D, "flow.modes");
    }
    if (!potential_of(c) && s != 1.0) m.drift = s * m.drift;
    if (!c.identity_noise) {
        m.noise.clear();
        for (std::size_t a = 0; a < c.noise_fields.size(); ++a)
            m.noise.push_back(detail::field_from_modes(c.noise_fields[a], D, "noise[" + std::to_string(a) + "]"));
    }
    m.validate();
    return m;
}

/// SEO blocks of the config model (alpha-interpreted) at truncation N.
inline SeoBlocks build_blocks(const ModelConfig& c, int N)
{
    const SdeModel m = build_model(c, N);
    return c.alpha == 0.5 ? seo_blocks(m) : seo_alpha(m);
}

/// Copy with a swept parameter replaced.
inline ModelConfig with_param(ModelConfig c, const std::string& name, double value)
{
    c.params[name] = value;
    return c;
}

}  // namespace sts::cli
