// Grid search for telescoping-bound schedules.
//
// optimize_schedule runs the backward dynamic program over
// (stage, cumulative j, cumulative delta); brute_force_optimize enumerates
// the same grid point by point and exists to check it.

#pragma once

#include "ensval/bounds.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ensval {

struct OptimizerGrid
{
    /// Step between candidate delta values. The budget delta must be an
    /// integer multiple of it (to 1e-9 relative).
    double delta_increment = 1e-4;
    /// Candidate j_i values. Empty means the integers {0, ..., s}.
    std::vector<double> j_candidates;
    std::size_t t = 1;

    /// {0} together with s e^{-ci} for i = 1..t, the fractional values the
    /// closed-form schedule uses.
    static std::vector<double> geometric_candidates(std::int64_t s, double c, std::size_t t);

    std::vector<double> resolved_j_candidates(std::int64_t s) const;

    /// Number of increments K in the budget; candidate values are delta * k / K.
    std::int64_t delta_steps(double delta) const;
};

/// v(i, sum j, sum delta): best value of stages i..t given that j_i..j_t sum
/// to a tail state and delta_{i+1}..delta_{t+1} sum to a number of grid steps.
class ValueTable
{
  public:
    ValueTable(std::size_t t, std::int64_t delta_steps);

    std::size_t stages() const { return tails_.size(); }
    std::int64_t delta_steps() const { return delta_steps_; }

    /// Reachable tail sums for stage i in 1..t, ascending.
    std::span<const double> tails(std::size_t stage) const { return tails_.at(stage - 1); }
    double value(std::size_t stage, std::size_t tail_index, std::int64_t steps) const;

    /// Index of an exact tail value, or -1.
    std::ptrdiff_t find_tail(std::size_t stage, double tail) const;

  private:
    friend ValueTable build_value_table(const BoundContext&, const EnsembleSpec&,
                                        const OptimizerGrid&);

    std::vector<double>& row(std::size_t stage, std::size_t tail_index);

    std::int64_t delta_steps_;
    std::vector<std::vector<double>> tails_;
    std::vector<std::vector<std::vector<double>>> values_;
};

/// Dense DP cells allowed before build_value_table refuses a grid.
inline constexpr std::uint64_t kDefaultTableCap = 50'000'000;

ValueTable build_value_table(const BoundContext& ctx, const EnsembleSpec& ens,
                             const OptimizerGrid& grid);

struct ScheduleOptimum
{
    Schedule schedule;
    BoundResult bound;
};

/// Minimizes the telescoping bound over the grid. Among schedules with equal
/// bound, returns the lexicographically smallest (j_1..j_t, delta_1..delta_{t+1}).
ScheduleOptimum optimize_schedule(const BoundContext& ctx, const EnsembleSpec& ens,
                                  const OptimizerGrid& grid);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

ScheduleOptimum brute_force_optimize(const BoundContext& ctx, const EnsembleSpec& ens,
                                     const OptimizerGrid& grid,
                                     std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace ensval
