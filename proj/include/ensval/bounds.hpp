// Out-of-sample error bounds for equally weighted Gibbs ensembles.
//
// Every bound here is a closed-form function of the hypothesis count m, the
// per-classifier validation size n, a confidence budget delta and (for the
// ensemble forms) the ensemble size s. Nothing in this header keeps state.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ensval {

/// Raised when an argument violates an operation's precondition.
class PreconditionError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// The (m, n, delta) triple every bound is evaluated against.
struct BoundContext
{
    std::int64_t m = 1;  ///< hypothesis classifiers
    std::int64_t n = 1;  ///< validation examples per classifier
    double delta = 1.0;  ///< confidence budget, in (0, 1]

    /// Builds a context, throwing PreconditionError on m < 1, n < 1 or
    /// delta outside (0, 1].
    static BoundContext make(std::int64_t m, std::int64_t n, double delta);

    void validate() const;
};

/// The selected subset S: its size and, optionally, the observed validation
/// error rates of its members (each a count of errors over n).
struct EnsembleSpec
{
    std::int64_t s = 1;
    std::optional<std::vector<double>> observed_validation_errors;

    void validate(const BoundContext& ctx) const;
};

/// Telescoping parameters j_1..j_t and delta_1..delta_{t+1}.
struct Schedule
{
    std::vector<double> j_values;
    std::vector<double> delta_values;

    std::size_t stages() const { return j_values.size(); }
    double total_j() const;
    double total_delta() const;

    bool operator==(const Schedule&) const = default;
};

enum class BoundKind
{
    uniform,
    nearly_uniform,
    ensemble_uniform,
    ensemble_nearly_uniform,
    ensemble_nearly_uniform_observed,
    telescoping,
    closed_form,
    analytic_envelope,
    full_classifier,
};

std::string_view to_string(BoundKind kind);
std::optional<BoundKind> parse_bound_kind(std::string_view name);

struct BoundResult
{
    double epsilon = 1.0;      ///< min(epsilon_raw, 1)
    double epsilon_raw = 1.0;
    double delta_spent = 0.0;
    std::optional<Schedule> schedule;
    BoundKind kind = BoundKind::uniform;
};

/// sqrt(ln(1/delta) / 2n). Not clamped.
double hoeffding_epsilon(std::int64_t n, double delta);

/// Width that holds for all m classifiers at once with probability 1 - delta.
BoundResult uniform_epsilon(const BoundContext& ctx);

/// Width that holds for all but at most j classifiers. Fractional j is
/// allowed; j = 1 coincides with the uniform width.
BoundResult nearly_uniform_epsilon(const BoundContext& ctx, double j);

/// Clamped building block min(sqrt(ln(m / (delta_part * j)) / 2n), 1).
///
/// j = 0 means the uniform (backstop) width sqrt(ln(m / delta_part) / 2n);
/// delta_part = 0 always gives 1. Total on j >= 0, delta_part >= 0.
double epsilon_hat(const BoundContext& ctx, double j, double delta_part);

BoundResult ensemble_uniform_epsilon(const BoundContext& ctx, const EnsembleSpec& ens);

/// (1 - j/s) * epsilon_hat(j, delta) + j/s: the a-priori form, where the j
/// allowed misvalidations are charged the trivial error rate 1.
BoundResult ensemble_nearly_uniform_epsilon(const BoundContext& ctx, const EnsembleSpec& ens,
                                            double j);

/// Same as ensemble_nearly_uniform_epsilon but charges the j misvalidations
/// 1 - p_i where p_i are the j smallest observed rates. Requires integer j.
BoundResult ensemble_nearly_uniform_epsilon_observed(const BoundContext& ctx,
                                                     const EnsembleSpec& ens, double j);

/// Summands of the telescoping bound. The library always adds them from the
/// last stage backwards, and the schedule optimizer does the same, so a
/// schedule's value is bit-identical whichever of the two computes it.
double telescoping_leading_term(const BoundContext& ctx, std::int64_t s, double total_j,
                                double delta_1);
double telescoping_stage_term(const BoundContext& ctx, std::int64_t s, double j_stage,
                              double tail_j, double delta_part);

BoundResult telescoping_epsilon(const BoundContext& ctx, const EnsembleSpec& ens,
                                const Schedule& sched);

/// Geometric schedule: t = ceil(ln(2n) / 2c), j_i = s e^{-ci},
/// delta_i = (e - 1) delta e^{-i}, delta_{t+1} = 0.
Schedule closed_form_schedule(const BoundContext& ctx, const EnsembleSpec& ens, double c);

/// sum_i e^{-c(i-1)} epsilon_hat(j_i, delta_i) + e^{-ct} epsilon_hat(0, 0)
/// for the closed-form schedule. This upper-bounds telescoping_epsilon on
/// the same schedule.
BoundResult epsilon_star(const BoundContext& ctx, const EnsembleSpec& ens, double c);

struct EnvelopeConstants
{
    double multiplier = 0.0;  ///< K = e^c / (e^c - 1)
    double additive = 0.0;    ///< sqrt(c + 1) K^2 + 1
};

EnvelopeConstants analytic_envelope_constants(double c);

/// (1 / sqrt(2n)) [sqrt(ln(m/s) + ln(1/delta)) K + sqrt(c + 1) K^2 + 1].
/// Depends on m and s only through m/s.
BoundResult epsilon_star_analytic_bound(const BoundContext& ctx, const EnsembleSpec& ens,
                                        double c);

/// Bound on the classifier trained on all in-sample data: the holdout Gibbs
/// bound plus the rate at which the two classifiers disagree.
BoundResult extend_full_classifier_bound(const BoundResult& gibbs_bound, double disagreement_rate);

}  // namespace ensval
