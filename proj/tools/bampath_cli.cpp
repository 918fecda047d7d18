// bampath: command-line front end for boosting paths, closed-form oracles,
// rate checks and the reproducible experiments.
//
// Exit codes: 0 success, 1 configuration or integrity error, 2 numeric error,
// 3 an experiment or report whose acceptance check failed.

#include <bampath/closedform.hpp>
#include <bampath/csv.hpp>
#include <bampath/error.hpp>
#include <bampath/experiment.hpp>
#include <bampath/rates.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace bampath;

namespace {

struct CommonOptions
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool svg = false;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_flag("--svg", o.svg, "also write SVG figures");
}

ExperimentConfig resolve(const CommonOptions& o, const std::string& fallback_experiment,
                         std::optional<std::string> experiment = std::nullopt)
{
    ExperimentConfig c = o.config.empty()
                             ? default_config(experiment.value_or(fallback_experiment))
                             : load_config(o.config, experiment);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.svg) c.svg = true;
    return c;
}

LossSpec loss_for(const std::string& family)
{
    if (family == "gaussian") return LossSpec::l2();
    if (family == "binomial") return LossSpec::binomial();
    if (family == "poisson") return LossSpec::poisson();
    throw config_error("family '" + family + "' is not available for fit");
}

Vector beta_of(const ExperimentConfig& c)
{
    return Eigen::Map<const Vector>(c.data.beta.data(), static_cast<Index>(c.data.beta.size()));
}

int cmd_fit(const ExperimentConfig& c)
{
    const SynthData d = synth_glm_data(c.data.n, beta_of(c), c.data.rho, c.data.family, c.seed);
    const BlockPartition part =
        c.run.mode == BoostMode::joint ? joint_partition(d.x) : componentwise_partition(d.x);
    const BoostPath path = run_boost(part, loss_for(c.data.family), d.y, c.run);
    fs::create_directories(c.output_dir);
    write_path_csv(c.output_dir / "fit_path.csv", path);
    std::cout << "fit: " << path.iterations() << " iterations, terminated by "
              << to_string(path.terminated_by) << ", final loss "
              << csv::format_double(path.losses.back()) << "\n";
    if (!path.error.empty()) std::cout << "stopped: " << path.error << "\n";
    return 0;
}

// Joint linear boosting against its closed form, iterate by iterate.
int cmd_oracle(const ExperimentConfig& c)
{
    const SynthData d = synth_glm_data(c.data.n, beta_of(c), c.data.rho, "gaussian", c.seed);
    BoostConfig bc = c.run;
    bc.mode = BoostMode::joint;
    const BoostPath path = run_boost(joint_partition(d.x), LossSpec::l2(), d.y, bc);
    fs::create_directories(c.output_dir);
    const Index p = d.x.cols();
    std::vector<std::string> labels{"k", "rel_err"};
    for (const auto& l : csv::numbered_labels("closed_form", p)) labels.push_back(l);
    csv::Writer w(c.output_dir / "oracle_path.csv", labels);
    double worst = 0.0;
    for (int k = 0; k <= path.iterations(); ++k) {
        const Vector cf = linear_boost_path(d.x, d.y, bc.nu, k);
        const double e = k == 0 ? 0.0 : linalg::rel_diff(path.betas[static_cast<std::size_t>(k)], cf);
        worst = std::max(worst, e);
        w.cell(k).cell(e).cells(cf);
        w.end_row();
    }
    std::cout << "oracle: max relative error over " << path.iterations()
              << " iterations = " << csv::format_double(worst) << "\n";
    return 0;
}

int cmd_rates(const ExperimentConfig& c)
{
    const SynthData d = synth_glm_data(c.data.n, beta_of(c), c.data.rho, "gaussian", c.seed);
    const BlockPartition part = componentwise_partition(d.x);
    BoostConfig bc = c.run;
    bc.mode = BoostMode::greedy;
    const BoostPath path = run_boost(part, LossSpec::l2(), d.y, bc);
    const Matrix q = linalg::gram(d.x);
    const double gamma = rate_quadratic(q, part.size(), bc.nu);
    const RateReport rep = check_bound(path, gamma, l2_optimal_loss(d.x, d.y));
    fs::create_directories(c.output_dir);
    write_rate_csv(c.output_dir / "rates.csv", rep);
    std::cout << "rates: mu = " << csv::format_double(rep.mu) << ", L = " << csv::format_double(rep.l)
              << ", gamma = " << csv::format_double(gamma) << ", bound "
              << (rep.all_compliant() ? "holds" : "violated") << " over " << path.iterations()
              << " iterations\n";
    if (!rep.all_compliant()) {
        std::cout << "first violation at k=" << *rep.first_violation() << "\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Boosting paths, closed forms and convergence checks"};
    app.set_version_flag("--version", std::string(library_version));
    app.require_subcommand(1);

    CommonOptions fit_o, oracle_o, rates_o, exp_o;
    auto* fit = app.add_subcommand("fit", "boost a synthetic GLM and write the path");
    add_common(fit, fit_o);
    auto* oracle = app.add_subcommand("oracle", "compare joint L2 boosting with its closed form");
    add_common(oracle, oracle_o);
    auto* rates = app.add_subcommand("rates", "check the linear-rate bound on a quadratic loss");
    add_common(rates, rates_o);
    auto* exp = app.add_subcommand("experiment", "run a named reproducible experiment");
    add_common(exp, exp_o);
    std::string exp_name;
    std::vector<std::string> names;
    for (const auto& [name, _] : experiment_catalog()) names.push_back(name);
    exp->add_option("name", exp_name, "experiment name")->required()->check(CLI::IsMember(names));
    auto* report = app.add_subcommand("report", "summarise manifests under a directory");
    std::string report_dir = "out";
    report->add_option("--out", report_dir, "directory holding experiment outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit) return cmd_fit(resolve(fit_o, "gsq_equivalence"));
        if (*oracle) return cmd_oracle(resolve(oracle_o, "gsq_equivalence"));
        if (*rates) return cmd_rates(resolve(rates_o, "rates_sweep"));
        if (*exp) {
            const ScenarioResult r = run_experiment(resolve(exp_o, exp_name, exp_name));
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (criterion " << r.criterion
                      << ")\n";
            for (const auto& d : r.details) std::cout << "  " << d << "\n";
            for (const auto& e : r.errors) std::cout << "  error: " << e << "\n";
            std::cout << "outputs in " << r.dir.string() << "\n";
            return r.passed ? 0 : 3;
        }
        if (*report) {
            const Report rep = emit_report(report_dir);
            std::cout << rep.text;
            return rep.all_passed ? 0 : 3;
        }
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const integrity_error& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const bampath_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
