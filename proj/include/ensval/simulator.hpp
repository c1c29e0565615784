// Monte Carlo coverage harness: synthetic classifier populations with known
// true error rates, simulated validation, ensemble selection, and counts of
// how often each bound is violated.

#pragma once

#include "ensval/bounds.hpp"
#include "ensval/telescope_opt.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ensval {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (seed, stream); the per-trial generator seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Generator for one trial. Depends only on (seed, trial).
Rng trial_generator(std::uint64_t seed, std::uint64_t trial);

struct RateDistribution
{
    enum class Kind { uniform_on_interval, fixed_list, two_point };
    Kind kind = Kind::fixed_list;
    double lo = 0.0;
    double hi = 0.0;
    double p_low = 0.0;
    double p_high = 0.0;
    double fraction_low = 0.0;
};

struct SyntheticWorld
{
    std::vector<double> true_error_rates;  ///< p*_i, one per classifier
    std::int64_t n = 1;
    RateDistribution distribution;
    std::uint64_t seed = 0;

    std::size_t m() const { return true_error_rates.size(); }
    void validate() const;

    static SyntheticWorld uniform_on_interval(std::size_t m, double lo, double hi, std::int64_t n,
                                              std::uint64_t seed);
    static SyntheticWorld fixed_list(std::vector<double> rates, std::int64_t n, std::uint64_t seed);
    /// The first round(fraction_low * m) classifiers get p_low, the rest p_high.
    static SyntheticWorld two_point(std::size_t m, double p_low, double p_high, double fraction_low,
                                    std::int64_t n, std::uint64_t seed);
};

struct SelectionRule
{
    enum class Kind { lowest_s, random_s, threshold };
    Kind kind = Kind::lowest_s;
    double tau = 0.0;

    static SelectionRule lowest() { return {Kind::lowest_s, 0.0}; }
    static SelectionRule random() { return {Kind::random_s, 0.0}; }
    static SelectionRule threshold(double tau) { return {Kind::threshold, tau}; }
};

std::string to_string(const SelectionRule& rule);

/// Ascending indices of the selected classifiers. lowest_s breaks rate ties
/// by index; random_s draws from rng; threshold ignores s.
std::vector<std::size_t> select_ensemble(std::span<const double> validation_rates, std::size_t s,
                                         const SelectionRule& rule, Rng* rng = nullptr);

/// One bound in an experiment. Which fields matter depends on kind:
/// j for the nearly uniform forms, c for closed_form / analytic_envelope,
/// schedule or grid for telescoping (a grid is optimized once per s).
struct BoundUnderTest
{
    std::string label;
    BoundKind kind = BoundKind::ensemble_uniform;
    double j = 0.0;
    double c = 3.0;
    std::optional<Schedule> schedule;
    std::optional<OptimizerGrid> grid;
};

struct ExperimentConfig
{
    SyntheticWorld world;
    std::int64_t s = 1;
    SelectionRule rule;
    double delta = 0.05;
    std::vector<BoundUnderTest> bounds;
    std::uint64_t trials = 1;
    unsigned threads = 1;
};

/// Parses the JSON experiment description used by `ensval simulate`.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct TrialOutcome
{
    std::vector<double> validation_rates;
    std::vector<std::size_t> selected;
    double gap = 0.0;  ///< E_S p* - E_S p
    std::vector<double> epsilon;
    std::vector<bool> violated;
};

/// Draws validation counts from Binomial(n, p*_i) and applies the rule.
TrialOutcome run_trial(const ExperimentConfig& config, std::uint64_t trial);

struct KindCoverage
{
    std::string label;
    BoundKind kind = BoundKind::ensemble_uniform;
    std::uint64_t violations = 0;
    double frequency = 0.0;
    double epsilon = 0.0;  ///< mean over trials when the bound is data dependent
    double upper_confidence_limit = 1.0;
};

struct CoverageReport
{
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double delta = 0.0;
    double confidence_level = 0.999;
    std::vector<KindCoverage> bounds;

    /// No bound's violation frequency exceeds delta.
    bool sound() const;
};

CoverageReport run_coverage_experiment(const ExperimentConfig& config);

/// Exact one-sided (Clopper-Pearson) upper limit on a binomial probability.
double binomial_upper_limit(std::uint64_t successes, std::uint64_t trials, double level);

}  // namespace ensval
