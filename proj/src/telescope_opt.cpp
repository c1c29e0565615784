#include "ensval/telescope_opt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ensval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& what) { throw PreconditionError(what); }

// Everything the DP and the reconstruction share for one optimization call.
struct Problem
{
    const BoundContext& ctx;
    const EnsembleSpec& ens;
    std::size_t t;
    std::int64_t steps;
    std::vector<double> candidates;
    std::vector<double> delta_values;  // delta * k / K for k = 0..K

    Problem(const BoundContext& c, const EnsembleSpec& e, const OptimizerGrid& grid)
        : ctx(c), ens(e), t(grid.t)
    {
        ctx.validate();
        ens.validate(ctx);
        if (t < 1) fail("optimizer needs t >= 1");
        candidates = grid.resolved_j_candidates(ens.s);
        steps = grid.delta_steps(ctx.delta);
        delta_values.resize(static_cast<std::size_t>(steps) + 1);
        const double k_total = static_cast<double>(steps);
        for (std::int64_t k = 0; k <= steps; ++k)
            delta_values[static_cast<std::size_t>(k)] =
                ctx.delta * (static_cast<double>(k) / k_total);
    }

    double s() const { return static_cast<double>(ens.s); }

    double stage(double j, double tail, std::int64_t k) const
    {
        return telescoping_stage_term(ctx, ens.s, j, tail, delta_values[static_cast<std::size_t>(k)]);
    }

    double lead(double total_j, std::int64_t k) const
    {
        return telescoping_leading_term(ctx, ens.s, total_j, delta_values[static_cast<std::size_t>(k)]);
    }

    // out[D] = min_d stage(j, tail, d) + next[D - d]
    void fold(double j, double tail, const std::vector<double>& next, std::vector<double>& out) const
    {
        const auto width = static_cast<std::size_t>(steps) + 1;
        std::vector<double> terms(width);
        for (std::size_t d = 0; d < width; ++d) terms[d] = stage(j, tail, static_cast<std::int64_t>(d));
        out.assign(width, kInf);
        for (std::size_t total = 0; total < width; ++total) {
            double best = kInf;
            for (std::size_t d = 0; d <= total; ++d) best = std::min(best, terms[d] + next[total - d]);
            out[total] = best;
        }
    }

    std::vector<double> last_stage(double j) const
    {
        const auto width = static_cast<std::size_t>(steps) + 1;
        std::vector<double> out(width);
        for (std::size_t d = 0; d < width; ++d) out[d] = stage(j, 0.0, static_cast<std::int64_t>(d));
        return out;
    }

    double close(double total_j, const std::vector<double>& after_lead) const
    {
        double best = kInf;
        for (std::int64_t d = 0; d <= steps; ++d)
            best = std::min(best, lead(total_j, d) + after_lead[static_cast<std::size_t>(steps - d)]);
        return best;
    }
};

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Best total over every completion of the fixed j prefix (j_1..j_p).
double best_with_prefix(const Problem& pb, const ValueTable& table, const std::vector<double>& prefix)
{
    const std::size_t p = prefix.size();
    std::vector<double> tails(p + 1);
    std::vector<double> g;
    std::vector<double> scratch;

    auto evaluate = [&](double x, const std::vector<double>* next) {
        tails[p] = x;
        for (std::size_t h = p; h >= 1; --h) tails[h - 1] = prefix[h - 1] + tails[h];
        if (tails[0] > pb.s()) return kInf;
        if (next == nullptr)
            g = pb.last_stage(prefix[p - 1]);
        else
            pb.fold(prefix[p - 1], x, *next, g);
        for (std::size_t h = p - 1; h >= 1; --h) {
            pb.fold(prefix[h - 1], tails[h], g, scratch);
            g.swap(scratch);
        }
        return pb.close(tails[0], g);
    };

    if (p == pb.t) return evaluate(0.0, nullptr);

    double best = kInf;
    const auto next_tails = table.tails(p + 1);
    std::vector<double> next(static_cast<std::size_t>(pb.steps) + 1);
    for (std::size_t xi = 0; xi < next_tails.size(); ++xi) {
        for (std::int64_t k = 0; k <= pb.steps; ++k)
            next[static_cast<std::size_t>(k)] = table.value(p + 1, xi, k);
        best = std::min(best, evaluate(next_tails[xi], &next));
    }
    return best;
}

Schedule reconstruct(const Problem& pb, const ValueTable& table, double optimum)
{
    std::vector<double> js;
    for (std::size_t p = 1; p <= pb.t; ++p) {
        bool placed = false;
        for (double c : pb.candidates) {
            js.push_back(c);
            if (best_with_prefix(pb, table, js) == optimum) {
                placed = true;
                break;
            }
            js.pop_back();
        }
        if (!placed) throw std::logic_error("schedule reconstruction lost the optimum");
    }

    // suffix[h][D]: best of stages h..t given D steps for delta_{h+1}..delta_{t+1}.
    std::vector<double> tails(pb.t + 2, 0.0);
    for (std::size_t h = pb.t; h >= 1; --h) tails[h] = js[h - 1] + tails[h + 1];
    std::vector<std::vector<double>> suffix(pb.t + 1);
    suffix[pb.t] = pb.last_stage(js[pb.t - 1]);
    for (std::size_t h = pb.t - 1; h >= 1; --h) pb.fold(js[h - 1], tails[h + 1], suffix[h + 1], suffix[h]);

    std::vector<std::int64_t> ks;
    std::int64_t remaining = pb.steps;
    auto total_with = [&](std::size_t q, std::int64_t d) {
        // Stages 0..q-1 fixed by ks, stage q takes d steps, the rest is optimal.
        if (q == 0) return pb.lead(tails[1], d) + suffix[1][static_cast<std::size_t>(remaining - d)];
        double inner = pb.stage(js[q - 1], tails[q + 1], d) +
                       suffix[q + 1][static_cast<std::size_t>(remaining - d)];
        for (std::size_t h = q - 1; h >= 1; --h) inner = pb.stage(js[h - 1], tails[h + 1], ks[h]) + inner;
        return pb.lead(tails[1], ks[0]) + inner;
    };
    for (std::size_t q = 0; q < pb.t; ++q) {
        bool placed = false;
        for (std::int64_t d = 0; d <= remaining; ++d) {
            if (total_with(q, d) == optimum) {
                ks.push_back(d);
                remaining -= d;
                placed = true;
                break;
            }
        }
        if (!placed) throw std::logic_error("delta reconstruction lost the optimum");
    }
    ks.push_back(remaining);

    Schedule sched;
    sched.j_values = std::move(js);
    for (std::int64_t k : ks) sched.delta_values.push_back(pb.delta_values[static_cast<std::size_t>(k)]);
    return sched;
}

}  // namespace

std::vector<double> OptimizerGrid::geometric_candidates(std::int64_t s, double c, std::size_t t)
{
    if (!(c > 0.0)) fail(fmt::format("c must be positive, got {}", c));
    std::vector<double> out{0.0};
    for (std::size_t i = 1; i <= t; ++i)
        out.push_back(static_cast<double>(s) / std::exp(c * static_cast<double>(i)));
    return sorted_unique(std::move(out));
}

std::vector<double> OptimizerGrid::resolved_j_candidates(std::int64_t s) const
{
    std::vector<double> out;
    if (j_candidates.empty()) {
        for (std::int64_t j = 0; j <= s; ++j) out.push_back(static_cast<double>(j));
        return out;
    }
    out = j_candidates;
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) fail("j candidates must be distinct");
    for (double j : out)
        if (!(j >= 0.0) || j > static_cast<double>(s))
            fail(fmt::format("j candidate {} outside [0, s={}]", j, s));
    return out;
}

std::int64_t OptimizerGrid::delta_steps(double delta) const
{
    if (!(delta_increment > 0.0) || !std::isfinite(delta_increment))
        fail(fmt::format("delta increment must be positive, got {}", delta_increment));
    const double ratio = delta / delta_increment;
    const double k = std::round(ratio);
    if (k < 1.0) fail(fmt::format("delta increment {} exceeds budget {}", delta_increment, delta));
    if (std::abs(ratio - k) > 1e-9 * ratio)
        fail(fmt::format("delta increment {} does not divide budget {}", delta_increment, delta));
    return static_cast<std::int64_t>(k);
}

ValueTable::ValueTable(std::size_t t, std::int64_t delta_steps)
    : delta_steps_(delta_steps), tails_(t), values_(t)
{
}

double ValueTable::value(std::size_t stage, std::size_t tail_index, std::int64_t steps) const
{
    return values_.at(stage - 1).at(tail_index).at(static_cast<std::size_t>(steps));
}

std::ptrdiff_t ValueTable::find_tail(std::size_t stage, double tail) const
{
    const auto& v = tails_.at(stage - 1);
    const auto it = std::lower_bound(v.begin(), v.end(), tail);
    if (it == v.end() || *it != tail) return -1;
    return it - v.begin();
}

std::vector<double>& ValueTable::row(std::size_t stage, std::size_t tail_index)
{
    return values_[stage - 1][tail_index];
}

ValueTable build_value_table(const BoundContext& ctx, const EnsembleSpec& ens,
                             const OptimizerGrid& grid)
{
    const Problem pb(ctx, ens, grid);
    ValueTable table(pb.t, pb.steps);
    const auto width = static_cast<std::size_t>(pb.steps) + 1;

    // Reachable tails, last stage first.
    for (double c : pb.candidates)
        if (c <= pb.s()) table.tails_[pb.t - 1].push_back(c);
    for (std::size_t i = pb.t - 1; i >= 1; --i) {
        std::vector<double> reach;
        for (double x : table.tails_[i])
            for (double c : pb.candidates)
                if (const double tail = c + x; tail <= pb.s()) reach.push_back(tail);
        table.tails_[i - 1] = sorted_unique(std::move(reach));
    }
    std::uint64_t cells = 0;
    for (const auto& v : table.tails_) cells += v.size() * width;
    if (table.tails_[0].empty()) fail("optimizer grid has no feasible j values");
    if (cells > kDefaultTableCap)
        fail(fmt::format("value table would need {} cells (cap {})", cells, kDefaultTableCap));

    auto& last = table.values_[pb.t - 1];
    for (double c : table.tails_[pb.t - 1]) last.push_back(pb.last_stage(c));

    std::vector<double> folded;
    for (std::size_t i = pb.t - 1; i >= 1; --i) {
        auto& rows = table.values_[i - 1];
        rows.assign(table.tails_[i - 1].size(), std::vector<double>(width, kInf));
        const auto& next_tails = table.tails_[i];
        for (std::size_t xi = 0; xi < next_tails.size(); ++xi) {
            const double x = next_tails[xi];
            for (double c : pb.candidates) {
                const double tail = c + x;
                if (tail > pb.s()) continue;
                pb.fold(c, x, table.values_[i][xi], folded);
                auto& target = table.row(i, static_cast<std::size_t>(table.find_tail(i, tail)));
                for (std::size_t d = 0; d < width; ++d) target[d] = std::min(target[d], folded[d]);
            }
        }
    }
    return table;
}

ScheduleOptimum optimize_schedule(const BoundContext& ctx, const EnsembleSpec& ens,
                                  const OptimizerGrid& grid)
{
    const Problem pb(ctx, ens, grid);
    const ValueTable table = build_value_table(ctx, ens, grid);

    double optimum = kInf;
    const auto first = table.tails(1);
    std::vector<double> after_lead(static_cast<std::size_t>(pb.steps) + 1);
    for (std::size_t ti = 0; ti < first.size(); ++ti) {
        for (std::int64_t k = 0; k <= pb.steps; ++k)
            after_lead[static_cast<std::size_t>(k)] = table.value(1, ti, k);
        optimum = std::min(optimum, pb.close(first[ti], after_lead));
    }

    Schedule sched = reconstruct(pb, table, optimum);
    BoundResult bound = telescoping_epsilon(ctx, ens, sched);
    if (bound.epsilon_raw != optimum)
        throw std::logic_error(fmt::format("optimizer value {} disagrees with schedule value {}",
                                           optimum, bound.epsilon_raw));
    return {std::move(sched), std::move(bound)};
}

ScheduleOptimum brute_force_optimize(const BoundContext& ctx, const EnsembleSpec& ens,
                                     const OptimizerGrid& grid, std::uint64_t cap)
{
    const Problem pb(ctx, ens, grid);
    const std::size_t t = pb.t;
    const std::size_t nc = pb.candidates.size();

    // |candidates|^t * C(K + t, t) schedules.
    double count = std::pow(static_cast<double>(nc), static_cast<double>(t));
    for (std::size_t i = 1; i <= t; ++i)
        count *= static_cast<double>(pb.steps + static_cast<std::int64_t>(i)) / static_cast<double>(i);
    if (count > static_cast<double>(cap))
        fail(fmt::format("brute force would enumerate {:.0f} schedules (cap {})", count, cap));

    std::optional<ScheduleOptimum> best;
    Schedule sched;
    sched.j_values.resize(t);
    sched.delta_values.resize(t + 1);
    std::vector<std::size_t> jidx(t, 0);
    std::vector<std::int64_t> ks(t + 1, 0);

    auto visit_deltas = [&] {
        // delta_1..delta_t as an odometer with sum <= K; delta_{t+1} takes the rest.
        std::fill(ks.begin(), ks.end(), 0);
        std::int64_t used = 0;
        while (true) {
            ks[t] = pb.steps - used;
            for (std::size_t h = 0; h <= t; ++h)
                sched.delta_values[h] = pb.delta_values[static_cast<std::size_t>(ks[h])];
            BoundResult r = telescoping_epsilon(ctx, ens, sched);
            if (!best || r.epsilon_raw < best->bound.epsilon_raw) best = ScheduleOptimum{sched, std::move(r)};

            std::size_t pos = t;
            while (pos > 0 && used == pb.steps) {
                used -= ks[pos - 1];
                ks[pos - 1] = 0;
                --pos;
            }
            if (pos == 0) return;
            ++ks[pos - 1];
            ++used;
        }
    };

    while (true) {
        for (std::size_t h = 0; h < t; ++h) sched.j_values[h] = pb.candidates[jidx[h]];
        if (sched.total_j() <= pb.s()) visit_deltas();

        std::size_t pos = t;
        while (pos > 0 && ++jidx[pos - 1] == nc) {
            jidx[pos - 1] = 0;
            --pos;
        }
        if (pos == 0) break;
    }
    if (!best) fail("optimizer grid has no feasible schedule");
    return std::move(*best);
}

}  // namespace ensval
