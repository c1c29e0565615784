#include "ensval/simulator.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ensval {

namespace {

[[noreturn]] void fail(const std::string& what) { throw PreconditionError(what); }

bool data_dependent(const BoundUnderTest& b) { return b.kind == BoundKind::ensemble_nearly_uniform_observed; }

BoundResult evaluate(const BoundUnderTest& b, const BoundContext& ctx, const EnsembleSpec& ens)
{
    switch (b.kind) {
    case BoundKind::uniform:
    case BoundKind::ensemble_uniform: return ensemble_uniform_epsilon(ctx, ens);
    case BoundKind::ensemble_nearly_uniform: return ensemble_nearly_uniform_epsilon(ctx, ens, b.j);
    case BoundKind::ensemble_nearly_uniform_observed:
        return ensemble_nearly_uniform_epsilon_observed(ctx, ens, b.j);
    case BoundKind::telescoping:
        if (b.schedule) return telescoping_epsilon(ctx, ens, *b.schedule);
        if (b.grid) return optimize_schedule(ctx, ens, *b.grid).bound;
        fail(fmt::format("bound '{}' needs a schedule or an optimizer grid", b.label));
    case BoundKind::closed_form: return epsilon_star(ctx, ens, b.c);
    case BoundKind::analytic_envelope: return epsilon_star_analytic_bound(ctx, ens, b.c);
    case BoundKind::nearly_uniform:
    case BoundKind::full_classifier: break;
    }
    fail(fmt::format("bound kind '{}' does not bound the ensemble gap", to_string(b.kind)));
}

// Data-independent epsilons depend only on the ensemble size, which varies
// between trials only under threshold selection.
class EpsilonCache
{
  public:
    explicit EpsilonCache(const ExperimentConfig& config) : config_(config) {}

    std::vector<double> for_trial(std::int64_t s, const std::vector<double>& selected_rates)
    {
        const std::vector<double>& fixed = lookup(s);
        std::vector<double> eps = fixed;
        const BoundContext ctx{static_cast<std::int64_t>(config_.world.m()), config_.world.n, config_.delta};
        for (std::size_t b = 0; b < config_.bounds.size(); ++b) {
            if (!data_dependent(config_.bounds[b])) continue;
            const EnsembleSpec ens{s, selected_rates};
            eps[b] = evaluate(config_.bounds[b], ctx, ens).epsilon;
        }
        return eps;
    }

    const std::vector<double>& lookup(std::int64_t s)
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
        const BoundContext ctx =
            BoundContext::make(static_cast<std::int64_t>(config_.world.m()), config_.world.n, config_.delta);
        const EnsembleSpec ens{s, std::nullopt};
        std::vector<double> eps(config_.bounds.size(), 0.0);
        for (std::size_t b = 0; b < config_.bounds.size(); ++b)
            if (!data_dependent(config_.bounds[b])) eps[b] = evaluate(config_.bounds[b], ctx, ens).epsilon;
        return cache_.emplace(s, std::move(eps)).first->second;
    }

  private:
    const ExperimentConfig& config_;
    std::mutex mutex_;
    std::map<std::int64_t, std::vector<double>> cache_;
};

TrialOutcome simulate_trial(const ExperimentConfig& config, EpsilonCache& cache, std::uint64_t trial)
{
    const auto& world = config.world;
    Rng rng = trial_generator(world.seed, trial);
    TrialOutcome out;
    out.validation_rates.resize(world.m());
    const double n = static_cast<double>(world.n);
    for (std::size_t i = 0; i < world.m(); ++i) {
        std::binomial_distribution<std::int64_t> errors(world.n, world.true_error_rates[i]);
        out.validation_rates[i] = static_cast<double>(errors(rng)) / n;
    }
    out.selected =
        select_ensemble(out.validation_rates, static_cast<std::size_t>(config.s), config.rule, &rng);

    std::vector<double> selected_rates;
    double true_sum = 0.0;
    double observed_sum = 0.0;
    for (std::size_t i : out.selected) {
        true_sum += world.true_error_rates[i];
        observed_sum += out.validation_rates[i];
        selected_rates.push_back(out.validation_rates[i]);
    }
    const double size = static_cast<double>(out.selected.size());
    out.gap = true_sum / size - observed_sum / size;

    out.epsilon = cache.for_trial(static_cast<std::int64_t>(out.selected.size()), selected_rates);
    out.violated.resize(out.epsilon.size());
    for (std::size_t b = 0; b < out.epsilon.size(); ++b) out.violated[b] = out.gap >= out.epsilon[b];
    return out;
}

void validate_config(const ExperimentConfig& config)
{
    config.world.validate();
    if (config.trials < 1) fail("trials must be >= 1");
    if (config.bounds.empty()) fail("no bounds under test");
    if (config.rule.kind != SelectionRule::Kind::threshold &&
        (config.s < 1 || config.s > static_cast<std::int64_t>(config.world.m())))
        fail(fmt::format("s must be in [1, m={}], got {}", config.world.m(), config.s));
    BoundContext::make(static_cast<std::int64_t>(config.world.m()), config.world.n, config.delta);
}

double number(const nlohmann::json& j, const char* key, double fallback)
{
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng trial_generator(std::uint64_t seed, std::uint64_t trial) { return Rng(derive_seed(seed, trial)); }

void SyntheticWorld::validate() const
{
    if (true_error_rates.empty()) fail("world needs at least one classifier");
    if (n < 1) fail(fmt::format("n must be >= 1, got {}", n));
    for (double p : true_error_rates)
        if (!(p >= 0.0 && p <= 1.0)) fail(fmt::format("true error rate {} outside [0, 1]", p));
}

SyntheticWorld SyntheticWorld::uniform_on_interval(std::size_t m, double lo, double hi, std::int64_t n,
                                                   std::uint64_t seed)
{
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) fail(fmt::format("need 0 <= lo <= hi <= 1, got [{}, {}]", lo, hi));
    SyntheticWorld w;
    w.n = n;
    w.seed = seed;
    w.distribution = {RateDistribution::Kind::uniform_on_interval, lo, hi, 0.0, 0.0, 0.0};
    // The world draws from its own stream, disjoint from every trial index.
    Rng rng(derive_seed(seed, ~std::uint64_t{0}));
    std::uniform_real_distribution<double> rate(lo, hi);
    w.true_error_rates.resize(m);
    for (auto& p : w.true_error_rates) p = lo == hi ? lo : rate(rng);
    w.validate();
    return w;
}

SyntheticWorld SyntheticWorld::fixed_list(std::vector<double> rates, std::int64_t n, std::uint64_t seed)
{
    SyntheticWorld w;
    w.true_error_rates = std::move(rates);
    w.n = n;
    w.seed = seed;
    w.distribution = {RateDistribution::Kind::fixed_list, 0.0, 0.0, 0.0, 0.0, 0.0};
    w.validate();
    return w;
}

SyntheticWorld SyntheticWorld::two_point(std::size_t m, double p_low, double p_high, double fraction_low,
                                         std::int64_t n, std::uint64_t seed)
{
    if (!(fraction_low >= 0.0 && fraction_low <= 1.0))
        fail(fmt::format("fraction_low must be in [0, 1], got {}", fraction_low));
    SyntheticWorld w;
    w.n = n;
    w.seed = seed;
    w.distribution = {RateDistribution::Kind::two_point, 0.0, 0.0, p_low, p_high, fraction_low};
    const auto low = static_cast<std::size_t>(std::llround(fraction_low * static_cast<double>(m)));
    w.true_error_rates.assign(m, p_high);
    std::fill_n(w.true_error_rates.begin(), std::min(low, m), p_low);
    w.validate();
    return w;
}

std::string to_string(const SelectionRule& rule)
{
    switch (rule.kind) {
    case SelectionRule::Kind::lowest_s: return "lowest_s";
    case SelectionRule::Kind::random_s: return "random_s";
    case SelectionRule::Kind::threshold: return fmt::format("threshold({})", rule.tau);
    }
    return "unknown";
}

std::vector<std::size_t> select_ensemble(std::span<const double> validation_rates, std::size_t s,
                                         const SelectionRule& rule, Rng* rng)
{
    const std::size_t m = validation_rates.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    if (rule.kind == SelectionRule::Kind::threshold) {
        std::vector<std::size_t> out;
        for (std::size_t i : idx)
            if (validation_rates[i] <= rule.tau) out.push_back(i);
        if (out.empty()) fail(fmt::format("no classifier has validation rate <= {}", rule.tau));
        return out;
    }
    if (s < 1 || s > m) fail(fmt::format("s must be in [1, {}], got {}", m, s));

    if (rule.kind == SelectionRule::Kind::lowest_s) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return validation_rates[a] < validation_rates[b]; });
    } else {
        if (rng == nullptr) fail("random selection needs a generator");
        // Partial Fisher-Yates; std::shuffle's draw pattern is unspecified.
        for (std::size_t i = 0; i < s; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, m - 1);
            std::swap(idx[i], idx[pick(*rng)]);
        }
    }
    idx.resize(s);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ExperimentConfig parse_experiment_config(std::string_view json_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(fmt::format("config is not valid JSON: {}", e.what()));
    }
    try {
        ExperimentConfig cfg;
        const auto seed = j.value("seed", std::uint64_t{0});
        const auto n = j.at("n").get<std::int64_t>();
        const auto& world = j.at("world");
        const std::string dist = world.value("distribution", std::string{"uniform"});
        if (dist == "uniform")
            cfg.world = SyntheticWorld::uniform_on_interval(world.at("m").get<std::size_t>(), number(world, "lo", 0.0),
                                                            number(world, "hi", 1.0), n, seed);
        else if (dist == "fixed")
            cfg.world = SyntheticWorld::fixed_list(world.at("rates").get<std::vector<double>>(), n, seed);
        else if (dist == "two_point")
            cfg.world = SyntheticWorld::two_point(world.at("m").get<std::size_t>(), world.at("p_low").get<double>(),
                                                  world.at("p_high").get<double>(),
                                                  world.at("fraction_low").get<double>(), n, seed);
        else
            fail(fmt::format("unknown rate distribution '{}'", dist));

        cfg.s = j.at("s").get<std::int64_t>();
        cfg.delta = j.at("delta").get<double>();
        cfg.trials = j.value("trials", std::uint64_t{1000});
        cfg.threads = j.value("threads", 1u);

        const auto sel = j.value("selection", nlohmann::json::object());
        const std::string rule = sel.value("rule", std::string{"lowest_s"});
        if (rule == "lowest_s")
            cfg.rule = SelectionRule::lowest();
        else if (rule == "random_s")
            cfg.rule = SelectionRule::random();
        else if (rule == "threshold")
            cfg.rule = SelectionRule::threshold(sel.at("tau").get<double>());
        else
            fail(fmt::format("unknown selection rule '{}'", rule));

        for (const auto& b : j.at("bounds")) {
            BoundUnderTest bt;
            const std::string kind = b.at("kind").get<std::string>();
            const auto parsed = parse_bound_kind(kind);
            if (!parsed) fail(fmt::format("unknown bound kind '{}'", kind));
            bt.kind = *parsed;
            bt.j = number(b, "j", 0.0);
            bt.c = number(b, "c", 3.0);
            if (b.contains("schedule")) {
                Schedule sched;
                sched.j_values = b.at("schedule").at("j").get<std::vector<double>>();
                sched.delta_values = b.at("schedule").at("delta").get<std::vector<double>>();
                bt.schedule = std::move(sched);
            }
            if (b.contains("optimize")) {
                const auto& o = b.at("optimize");
                OptimizerGrid grid;
                grid.t = o.value("t", std::size_t{2});
                grid.delta_increment = number(o, "delta_increment", 1e-4);
                if (o.contains("j_candidates")) grid.j_candidates = o.at("j_candidates").get<std::vector<double>>();
                bt.grid = std::move(grid);
            }
            bt.label = b.value("label", std::string{});
            if (bt.label.empty()) {
                bt.label = kind;
                if (bt.kind == BoundKind::ensemble_nearly_uniform ||
                    bt.kind == BoundKind::ensemble_nearly_uniform_observed)
                    bt.label += fmt::format("(j={})", bt.j);
                else if (bt.kind == BoundKind::closed_form || bt.kind == BoundKind::analytic_envelope)
                    bt.label += fmt::format("(c={})", bt.c);
                else if (bt.grid)
                    bt.label += fmt::format("(optimized,t={})", bt.grid->t);
            }
            cfg.bounds.push_back(std::move(bt));
        }
        validate_config(cfg);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(fmt::format("bad experiment config: {}", e.what()));
    }
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(fmt::format("cannot open config '{}'", path));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

TrialOutcome run_trial(const ExperimentConfig& config, std::uint64_t trial)
{
    validate_config(config);
    EpsilonCache cache(config);
    return simulate_trial(config, cache, trial);
}

bool CoverageReport::sound() const
{
    return std::all_of(bounds.begin(), bounds.end(), [&](const KindCoverage& k) { return k.frequency <= delta; });
}

CoverageReport run_coverage_experiment(const ExperimentConfig& config)
{
    validate_config(config);
    EpsilonCache cache(config);
    const std::size_t kinds = config.bounds.size();
    const std::uint64_t trials = config.trials;

    std::vector<char> violated(trials * kinds, 0);
    std::vector<double> epsilons(trials * kinds, 0.0);
    auto work = [&](std::uint64_t first, std::uint64_t stride) {
        for (std::uint64_t t = first; t < trials; t += stride) {
            const TrialOutcome out = simulate_trial(config, cache, t);
            for (std::size_t b = 0; b < kinds; ++b) {
                violated[t * kinds + b] = out.violated[b] ? 1 : 0;
                epsilons[t * kinds + b] = out.epsilon[b];
            }
        }
    };

    const unsigned threads = std::max(1u, config.threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    try {
                        work(w, threads);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    CoverageReport report;
    report.trials = trials;
    report.seed = config.world.seed;
    report.delta = config.delta;
    for (std::size_t b = 0; b < kinds; ++b) {
        KindCoverage k;
        k.label = config.bounds[b].label;
        k.kind = config.bounds[b].kind;
        double eps_sum = 0.0;
        for (std::uint64_t t = 0; t < trials; ++t) {
            k.violations += static_cast<std::uint64_t>(violated[t * kinds + b]);
            eps_sum += epsilons[t * kinds + b];
        }
        k.frequency = static_cast<double>(k.violations) / static_cast<double>(trials);
        k.epsilon = eps_sum / static_cast<double>(trials);
        k.upper_confidence_limit = binomial_upper_limit(k.violations, trials, report.confidence_level);
        report.bounds.push_back(std::move(k));
    }
    return report;
}

double binomial_upper_limit(std::uint64_t successes, std::uint64_t trials, double level)
{
    if (trials == 0) fail("binomial limit needs at least one trial");
    if (successes > trials) fail("more successes than trials");
    if (!(level > 0.0 && level < 1.0)) fail(fmt::format("confidence level must be in (0, 1), got {}", level));
    if (successes == trials) return 1.0;
    return boost::math::ibeta_inv(static_cast<double>(successes + 1), static_cast<double>(trials - successes),
                                  level);
}

}  // namespace ensval
