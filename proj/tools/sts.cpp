// sts: command-line front end for the stochastic evolution operator toolkit.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sts/cli.hpp"

namespace {

std::vector<double> parse_list(const std::string& s, const std::string& flag)
{
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected a comma-separated list of numbers, got '" + s + "'");
        }
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral analysis of stochastic evolution operators on tori"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sts::cli::tool_version);

    std::string config, out, t_grid, sweep_theta, sweep_param, sweep_values;
    std::uint64_t seed = 0;
    int truncation = 0;
    double theta = 0.0, alpha = 0.0;
    bool check = false;

    const std::vector<std::pair<std::string, std::string>> help{
        {"spectrum", "per-degree eigenvalues"},
        {"classify", "supersymmetry phase and ground state (always convergence-checked)"},
        {"witten", "Witten index and partition function on the t grid"},
        {"pair", "boson-fermion pairing check"},
        {"evolve", "operator-evolved density against a trajectory ensemble"},
        {"mc-compare", "ground-state expectation and correlator against Monte Carlo"},
        {"dynamo", "kinematic dynamo spectrum against induction time stepping"},
        {"langevin-check", "Langevin SEO against its Hermitian form"},
        {"sweep", "phase map over theta x flow parameter"}};
    std::vector<CLI::Option*> seed_opts, trunc_opts, theta_opts, alpha_opts, out_opts, tgrid_opts;
    for (const auto& [name, desc] : help) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config, "JSON model configuration")->required()->check(CLI::ExistingFile);
        out_opts.push_back(sub->add_option("--out", out, "output directory"));
        seed_opts.push_back(sub->add_option("--seed", seed, "master RNG seed"));
        trunc_opts.push_back(sub->add_option("--truncation", truncation, "Fourier truncation N")->check(CLI::PositiveNumber));
        theta_opts.push_back(sub->add_option("--theta", theta, "temperature Theta")->check(CLI::NonNegativeNumber));
        alpha_opts.push_back(sub->add_option("--alpha", alpha, "interpretation parameter")->check(CLI::Range(0.0, 1.0)));
        tgrid_opts.push_back(sub->add_option("--t-grid", t_grid, "comma-separated t samples"));
        sub->add_flag("--check-convergence", check, "re-solve at N+2 and flag eigenvalue drift");
        if (name == "sweep") {
            sub->add_option("--sweep-theta", sweep_theta, "comma-separated theta values");
            sub->add_option("--sweep-param", sweep_param, "flow parameter swept as param2");
            sub->add_option("--sweep-values", sweep_values, "comma-separated param2 values");
        }
    }

    sts::cli::Overrides ov;
    try {
        app.parse(argc, argv);
        auto given = [](const std::vector<CLI::Option*>& opts) {
            for (auto* o : opts)
                if (o->count() > 0) return true;
            return false;
        };
        if (given(out_opts)) ov.out = out;
        if (given(seed_opts)) ov.seed = seed;
        if (given(trunc_opts)) ov.truncation = truncation;
        if (given(theta_opts)) ov.theta = theta;
        if (given(alpha_opts)) ov.alpha = alpha;
        if (given(tgrid_opts)) ov.t_grid = parse_list(t_grid, "--t-grid");
        ov.check_convergence = check;
        if (!sweep_theta.empty()) ov.sweep_theta = parse_list(sweep_theta, "--sweep-theta");
        if (!sweep_param.empty()) ov.sweep_param = sweep_param;
        if (!sweep_values.empty()) ov.sweep_values = parse_list(sweep_values, "--sweep-values");
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sts::cli::exit_config;
    }
    return sts::cli::run_command(app.get_subcommands().front()->get_name(), config, ov, std::cerr);
}
