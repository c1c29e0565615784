#include "ensval/bounds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ensval {

namespace {

// Slack allowed when comparing a schedule's summed delta with the budget;
// grid schedules hit the budget up to rounding in the summation.
constexpr double kBudgetRelTol = 1e-12;

[[noreturn]] void fail(const std::string& what) { throw PreconditionError(what); }

BoundResult clamped(double raw, double delta_spent, BoundKind kind,
                    std::optional<Schedule> sched = std::nullopt)
{
    BoundResult r;
    r.epsilon_raw = raw;
    r.epsilon = std::min(raw, 1.0);
    r.delta_spent = delta_spent;
    r.schedule = std::move(sched);
    r.kind = kind;
    return r;
}

void validate_c(double c)
{
    if (!(c > 0.0) || !std::isfinite(c)) fail(fmt::format("c must be positive, got {}", c));
}

void validate_schedule(const BoundContext& ctx, const EnsembleSpec& ens, const Schedule& sched)
{
    if (sched.delta_values.size() != sched.j_values.size() + 1)
        fail(fmt::format("schedule with t={} needs {} delta values, got {}", sched.stages(),
                         sched.stages() + 1, sched.delta_values.size()));
    for (double j : sched.j_values)
        if (!(j >= 0.0) || !std::isfinite(j)) fail(fmt::format("schedule j value {} is invalid", j));
    for (double d : sched.delta_values)
        if (!(d >= 0.0) || !std::isfinite(d))
            fail(fmt::format("schedule delta value {} is invalid", d));
    if (sched.total_j() > static_cast<double>(ens.s))
        fail(fmt::format("schedule spends j={} but s={}", sched.total_j(), ens.s));
    const double spent = sched.total_delta();
    if (!(spent > 0.0)) fail("schedule spends no confidence budget");
    if (spent > ctx.delta * (1.0 + kBudgetRelTol))
        fail(fmt::format("schedule spends delta={} beyond budget {}", spent, ctx.delta));
}

constexpr std::array kKindNames{
    std::pair{BoundKind::uniform, std::string_view{"uniform"}},
    std::pair{BoundKind::nearly_uniform, std::string_view{"nearly_uniform"}},
    std::pair{BoundKind::ensemble_uniform, std::string_view{"ensemble_uniform"}},
    std::pair{BoundKind::ensemble_nearly_uniform, std::string_view{"ensemble_nearly_uniform"}},
    std::pair{BoundKind::ensemble_nearly_uniform_observed,
              std::string_view{"ensemble_nearly_uniform_observed"}},
    std::pair{BoundKind::telescoping, std::string_view{"telescoping"}},
    std::pair{BoundKind::closed_form, std::string_view{"closed_form"}},
    std::pair{BoundKind::analytic_envelope, std::string_view{"analytic_envelope"}},
    std::pair{BoundKind::full_classifier, std::string_view{"full_classifier"}},
};

}  // namespace

BoundContext BoundContext::make(std::int64_t m, std::int64_t n, double delta)
{
    BoundContext ctx{m, n, delta};
    ctx.validate();
    return ctx;
}

void BoundContext::validate() const
{
    if (m < 1) fail(fmt::format("m must be >= 1, got {}", m));
    if (n < 1) fail(fmt::format("n must be >= 1, got {}", n));
    if (!(delta > 0.0 && delta <= 1.0)) fail(fmt::format("delta must be in (0, 1], got {}", delta));
}

void EnsembleSpec::validate(const BoundContext& ctx) const
{
    if (s < 1 || s > ctx.m) fail(fmt::format("s must be in [1, m={}], got {}", ctx.m, s));
    if (!observed_validation_errors) return;
    const auto& rates = *observed_validation_errors;
    if (static_cast<std::int64_t>(rates.size()) != s)
        fail(fmt::format("expected {} observed rates, got {}", s, rates.size()));
    const double n = static_cast<double>(ctx.n);
    for (double p : rates) {
        if (!(p >= 0.0 && p <= 1.0)) fail(fmt::format("observed rate {} outside [0, 1]", p));
        const double count = p * n;
        if (std::abs(count - std::round(count)) > 1e-9 * std::max(1.0, n))
            fail(fmt::format("observed rate {} is not a multiple of 1/n (n={})", p, ctx.n));
    }
}

double Schedule::total_j() const
{
    // Right to left, matching the tail sums of the telescoping bound.
    double tail = 0.0;
    for (auto it = j_values.rbegin(); it != j_values.rend(); ++it) tail = *it + tail;
    return tail;
}

double Schedule::total_delta() const
{
    return std::accumulate(delta_values.begin(), delta_values.end(), 0.0);
}

std::string_view to_string(BoundKind kind)
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

std::optional<BoundKind> parse_bound_kind(std::string_view name)
{
    for (const auto& [k, kind_name] : kKindNames)
        if (kind_name == name) return k;
    return std::nullopt;
}

double hoeffding_epsilon(std::int64_t n, double delta)
{
    if (n < 1) fail(fmt::format("n must be >= 1, got {}", n));
    if (!(delta > 0.0 && delta <= 1.0)) fail(fmt::format("delta must be in (0, 1], got {}", delta));
    return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

BoundResult uniform_epsilon(const BoundContext& ctx)
{
    ctx.validate();
    const double raw =
        std::sqrt(std::log(static_cast<double>(ctx.m) / ctx.delta) / (2.0 * static_cast<double>(ctx.n)));
    return clamped(raw, ctx.delta, BoundKind::uniform);
}

BoundResult nearly_uniform_epsilon(const BoundContext& ctx, double j)
{
    ctx.validate();
    if (!(j > 0.0) || j > static_cast<double>(ctx.m))
        fail(fmt::format("j must be in (0, m={}], got {}", ctx.m, j));
    const double raw = std::sqrt(std::log(static_cast<double>(ctx.m) / (ctx.delta * j)) /
                                 (2.0 * static_cast<double>(ctx.n)));
    return clamped(raw, ctx.delta, BoundKind::nearly_uniform);
}

double epsilon_hat(const BoundContext& ctx, double j, double delta_part)
{
    if (delta_part <= 0.0) return 1.0;
    const double denom = j > 0.0 ? delta_part * j : delta_part;
    const double log_term = std::log(static_cast<double>(ctx.m) / denom);
    if (log_term <= 0.0) return 0.0;
    return std::min(std::sqrt(log_term / (2.0 * static_cast<double>(ctx.n))), 1.0);
}

BoundResult ensemble_uniform_epsilon(const BoundContext& ctx, const EnsembleSpec& ens)
{
    ctx.validate();
    ens.validate(ctx);
    auto r = uniform_epsilon(ctx);
    r.kind = BoundKind::ensemble_uniform;
    return r;
}

BoundResult ensemble_nearly_uniform_epsilon(const BoundContext& ctx, const EnsembleSpec& ens,
                                            double j)
{
    ctx.validate();
    ens.validate(ctx);
    const double s = static_cast<double>(ens.s);
    if (!(j >= 0.0) || j > s) fail(fmt::format("j must be in [0, s={}], got {}", ens.s, j));
    const double frac = j / s;
    const double raw = (1.0 - frac) * epsilon_hat(ctx, j, ctx.delta) + frac;
    return clamped(raw, ctx.delta, BoundKind::ensemble_nearly_uniform);
}

BoundResult ensemble_nearly_uniform_epsilon_observed(const BoundContext& ctx,
                                                     const EnsembleSpec& ens, double j)
{
    ctx.validate();
    ens.validate(ctx);
    if (!ens.observed_validation_errors) fail("observed validation error rates are required");
    if (!(j >= 1.0) || j != std::floor(j))
        fail(fmt::format("j must be a positive integer, got {}", j));
    if (j > static_cast<double>(ens.s)) fail(fmt::format("j={} exceeds s={}", j, ens.s));

    const auto& rates = *ens.observed_validation_errors;
    std::vector<std::size_t> order(rates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto count = static_cast<std::size_t>(j);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return rates[a] < rates[b] || (rates[a] == rates[b] && a < b);
                      });
    double lowest_sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) lowest_sum += rates[order[i]];
    const double lowest_mean = lowest_sum / j;

    const double frac = j / static_cast<double>(ens.s);
    const double raw = (1.0 - frac) * epsilon_hat(ctx, j, ctx.delta) + frac * (1.0 - lowest_mean);
    return clamped(raw, ctx.delta, BoundKind::ensemble_nearly_uniform_observed);
}

double telescoping_leading_term(const BoundContext& ctx, std::int64_t s, double total_j,
                                double delta_1)
{
    return (1.0 - total_j / static_cast<double>(s)) * epsilon_hat(ctx, total_j, delta_1);
}

double telescoping_stage_term(const BoundContext& ctx, std::int64_t s, double j_stage,
                              double tail_j, double delta_part)
{
    return (j_stage / static_cast<double>(s)) * epsilon_hat(ctx, tail_j, delta_part);
}

BoundResult telescoping_epsilon(const BoundContext& ctx, const EnsembleSpec& ens,
                                const Schedule& sched)
{
    ctx.validate();
    ens.validate(ctx);
    validate_schedule(ctx, ens, sched);

    const std::size_t t = sched.stages();
    double tail = 0.0;
    double acc = 0.0;
    for (std::size_t h = t; h >= 1; --h) {
        const double term =
            telescoping_stage_term(ctx, ens.s, sched.j_values[h - 1], tail, sched.delta_values[h]);
        acc = h == t ? term : term + acc;
        tail = sched.j_values[h - 1] + tail;
    }
    const double lead = telescoping_leading_term(ctx, ens.s, tail, sched.delta_values[0]);
    const double raw = t == 0 ? lead : lead + acc;
    return clamped(raw, sched.total_delta(), BoundKind::telescoping, sched);
}

Schedule closed_form_schedule(const BoundContext& ctx, const EnsembleSpec& ens, double c)
{
    ctx.validate();
    ens.validate(ctx);
    validate_c(c);

    const double stages = std::ceil(std::log(2.0 * static_cast<double>(ctx.n)) / (2.0 * c));
    const auto t = static_cast<std::size_t>(std::max(stages, 1.0));

    Schedule sched;
    sched.j_values.reserve(t);
    sched.delta_values.reserve(t + 1);
    const double s = static_cast<double>(ens.s);
    for (std::size_t i = 1; i <= t; ++i) {
        const double di = static_cast<double>(i);
        sched.j_values.push_back(s / std::exp(c * di));
        sched.delta_values.push_back((std::numbers::e - 1.0) * ctx.delta / std::exp(di));
    }
    sched.delta_values.push_back(0.0);
    return sched;
}

BoundResult epsilon_star(const BoundContext& ctx, const EnsembleSpec& ens, double c)
{
    Schedule sched = closed_form_schedule(ctx, ens, c);
    const std::size_t t = sched.stages();
    double raw = 0.0;
    for (std::size_t i = 1; i <= t; ++i) {
        const double weight = std::exp(-c * static_cast<double>(i - 1));
        raw += weight * epsilon_hat(ctx, sched.j_values[i - 1], sched.delta_values[i - 1]);
    }
    raw += std::exp(-c * static_cast<double>(t)) * epsilon_hat(ctx, 0.0, 0.0);
    const double spent = sched.total_delta();
    return clamped(raw, spent, BoundKind::closed_form, std::move(sched));
}

EnvelopeConstants analytic_envelope_constants(double c)
{
    validate_c(c);
    const double k = std::exp(c) / std::expm1(c);
    return {k, std::sqrt(c + 1.0) * k * k + 1.0};
}

BoundResult epsilon_star_analytic_bound(const BoundContext& ctx, const EnsembleSpec& ens, double c)
{
    ctx.validate();
    ens.validate(ctx);
    const auto [k, additive] = analytic_envelope_constants(c);
    const double ratio = static_cast<double>(ctx.m) / static_cast<double>(ens.s);
    const double price = std::log(ratio) + std::log(1.0 / ctx.delta);
    const double raw =
        (std::sqrt(price) * k + additive) / std::sqrt(2.0 * static_cast<double>(ctx.n));
    return clamped(raw, ctx.delta, BoundKind::analytic_envelope);
}

BoundResult extend_full_classifier_bound(const BoundResult& gibbs_bound, double disagreement_rate)
{
    if (!(disagreement_rate >= 0.0 && disagreement_rate <= 1.0))
        fail(fmt::format("disagreement rate must be in [0, 1], got {}", disagreement_rate));
    return clamped(gibbs_bound.epsilon + disagreement_rate, gibbs_bound.delta_spent,
                   BoundKind::full_classifier, gibbs_bound.schedule);
}

}  // namespace ensval
