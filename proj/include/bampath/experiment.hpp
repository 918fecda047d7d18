#pragma once

#include <bampath/boost.hpp>
#include <bampath/rng.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bampath {

inline constexpr std::string_view library_version = "0.1.0";

/// Standard normal rows with equicorrelation rho, via the Cholesky factor of
/// the correlation matrix. For p = 2 this is x2 = rho x1 + sqrt(1 - rho^2) z.
Matrix correlated_features(Index n, Index p, double rho, Rng& rng);

struct SynthData
{
    Matrix x;
    Vector y;
};

/// Features as above, outcome from f = X beta through the canonical response:
/// "gaussian" adds unit noise, "binomial" draws Bernoulli(sigmoid f),
/// "poisson" draws Poisson(exp f). Throws config_error on bad rho or family.
SynthData synth_glm_data(Index n, const Vector& beta, double rho, const std::string& family,
                         std::uint64_t seed);

struct SurvivalData
{
    Matrix x;
    Vector times;
    Vector events;
};

/// Exponential event times with hazard exp(x' beta), independent exponential
/// censoring with rate `censor_rate`.
SurvivalData synth_cox_data(Index n, const Vector& beta, double rho, double censor_rate,
                            std::uint64_t seed);

/// Experiments and their acceptance criterion numbers.
inline const std::vector<std::pair<std::string, int>>& experiment_catalog()
{
    static const std::vector<std::pair<std::string, int>> cat{
        {"path_matching", 3},   {"pspline_unpenalized", 4}, {"gsq_equivalence", 5},
        {"rates_sweep", 6},     {"expfam_convergence", 7},  {"distreg_divergence", 10}};
    return cat;
}

struct DataSpec
{
    Index n = 100;
    double rho = 0.5;
    std::vector<double> beta{3.0, -2.0};
    std::string family = "gaussian";
};

struct ExperimentConfig
{
    std::string experiment;
    std::uint64_t seed = 1;
    DataSpec data;
    BoostConfig run;
    std::filesystem::path output_dir = "out";
    bool svg = false;
    /// Scenario-specific keys from the section named after the experiment.
    std::map<std::string, std::string> params;

    double param(const std::string& key, double fallback) const;
    std::vector<double> param_list(const std::string& key, std::vector<double> fallback) const;
};

/// Defaults for a named experiment; throws config_error for unknown names.
ExperimentConfig default_config(const std::string& experiment);

/// INI file with sections [experiment], [data], [run] and one per scenario.
/// Keys absent from the file keep the experiment defaults.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::string> experiment = std::nullopt);

std::vector<double> parse_list(const std::string& text);

struct ScenarioResult
{
    std::string name;
    int criterion = 0;
    bool passed = false;
    std::vector<std::string> details;
    std::optional<int> first_violation;
    std::vector<std::string> files;
    std::vector<std::string> errors;
    std::filesystem::path dir;
};

/// Runs one scenario into output_dir/<name>/ and writes its manifest.json.
/// Numeric errors inside a scenario are recorded, not thrown.
ScenarioResult run_experiment(const ExperimentConfig& config);

/// Plain-text summary of every manifest under `dir` (or of `dir` itself).
/// Throws integrity_error when no manifest exists or a listed CSV is missing
/// or empty.
struct Report
{
    std::string text;
    bool all_passed = true;
};
Report emit_report(const std::filesystem::path& dir);

} // namespace bampath
