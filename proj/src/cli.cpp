#include "ensval/cli.hpp"

#include "ensval/bounds.hpp"
#include "ensval/knn_holdout.hpp"
#include "ensval/simulator.hpp"
#include "ensval/telescope_opt.hpp"
#include "output.hpp"

#include <fmt/format.h>

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace ensval::cli {

namespace {

using output::exact;
using output::JsonWriter;
using output::rounded;

// Missing or malformed flags; maps to kUsageError.
class UsageError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class OracleMismatch : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class Format { json, csv, human };

Format parse_format(const std::string& s)
{
    if (s == "json") return Format::json;
    if (s == "csv") return Format::csv;
    return Format::human;
}

void add_format_option(CLI::App* cmd, std::string& target)
{
    cmd->add_option("--format", target, "Output format")
        ->check(CLI::IsMember({"json", "csv", "human"}))
        ->capture_default_str();
}

template <typename T>
T require(const std::optional<T>& v, const char* flag)
{
    if (!v) throw UsageError(fmt::format("{} is required here", flag));
    return *v;
}

std::vector<double> parse_list(const std::string& text, const char* flag)
{
    std::vector<double> out;
    std::string cleaned = text;
    std::replace_if(cleaned.begin(), cleaned.end(), [](char c) { return c == ',' || c == ';'; }, ' ');
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw UsageError(fmt::format("{}: '{}' is not a number", flag, tok));
        out.push_back(v);
    }
    return out;
}

std::vector<double> read_rates_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw PreconditionError(fmt::format("cannot open rates file '{}'", path));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_list(buf.str(), "--rates");
}

BoundKind parse_kind(std::string name)
{
    std::replace(name.begin(), name.end(), '-', '_');
    if (name == "analytic") return BoundKind::analytic_envelope;
    if (name == "observed") return BoundKind::ensemble_nearly_uniform_observed;
    if (name == "epsilon_star") return BoundKind::closed_form;
    if (name == "full") return BoundKind::full_classifier;
    if (auto k = parse_bound_kind(name)) return *k;
    throw UsageError(fmt::format("unknown bound kind '{}'", name));
}

void write_schedule(JsonWriter& w, const Schedule& sched)
{
    w.key("schedule").begin_object();
    w.field("t", static_cast<std::uint64_t>(sched.stages()));
    w.field("j", std::span<const double>(sched.j_values));
    w.field("delta", std::span<const double>(sched.delta_values));
    w.end_object();
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs
{
    std::string format = "json";
    std::string kind;
    std::optional<std::int64_t> m, n, s;
    std::optional<double> delta, j, c;
    std::optional<std::string> schedule_j, schedule_delta, rates;
    std::optional<std::string> base_kind;
    std::optional<double> gibbs_epsilon, disagreement;
};

BoundResult evaluate_bound(const BoundArgs& a, BoundKind kind)
{
    if (kind == BoundKind::full_classifier) {
        const double rate = require(a.disagreement, "--disagreement");
        if (a.gibbs_epsilon) {
            BoundResult gibbs;
            gibbs.epsilon_raw = *a.gibbs_epsilon;
            gibbs.epsilon = std::min(*a.gibbs_epsilon, 1.0);
            gibbs.delta_spent = a.delta.value_or(0.0);
            if (!(gibbs.epsilon >= 0.0)) throw PreconditionError("--gibbs-epsilon must be nonnegative");
            return extend_full_classifier_bound(gibbs, rate);
        }
        const BoundKind base = parse_kind(require(a.base_kind, "--base-kind or --gibbs-epsilon"));
        if (base == BoundKind::full_classifier) throw UsageError("--base-kind cannot be full_classifier");
        return extend_full_classifier_bound(evaluate_bound(a, base), rate);
    }

    const BoundContext ctx =
        BoundContext::make(a.m.value_or(1), require(a.n, "--n"), require(a.delta, "--delta"));
    auto ensemble = [&] {
        EnsembleSpec ens{require(a.s, "--s"), std::nullopt};
        if (a.rates) ens.observed_validation_errors = read_rates_file(*a.rates);
        return ens;
    };

    switch (kind) {
    case BoundKind::uniform: return uniform_epsilon(ctx);
    case BoundKind::nearly_uniform: return nearly_uniform_epsilon(ctx, require(a.j, "--j"));
    case BoundKind::ensemble_uniform: return ensemble_uniform_epsilon(ctx, ensemble());
    case BoundKind::ensemble_nearly_uniform:
        return ensemble_nearly_uniform_epsilon(ctx, ensemble(), require(a.j, "--j"));
    case BoundKind::ensemble_nearly_uniform_observed:
        require(a.rates, "--rates");
        return ensemble_nearly_uniform_epsilon_observed(ctx, ensemble(), require(a.j, "--j"));
    case BoundKind::telescoping: {
        Schedule sched;
        sched.j_values = parse_list(require(a.schedule_j, "--schedule-j"), "--schedule-j");
        sched.delta_values = parse_list(require(a.schedule_delta, "--schedule-delta"), "--schedule-delta");
        return telescoping_epsilon(ctx, ensemble(), sched);
    }
    case BoundKind::closed_form: return epsilon_star(ctx, ensemble(), require(a.c, "--c"));
    case BoundKind::analytic_envelope:
        return epsilon_star_analytic_bound(ctx, ensemble(), require(a.c, "--c"));
    case BoundKind::full_classifier: break;
    }
    throw UsageError("unsupported bound kind");
}

void print_bound(const BoundArgs& a, const BoundResult& r, Format fmt_, std::ostream& out)
{
    if (fmt_ == Format::json) {
        JsonWriter w(out);
        w.begin_object();
        w.field("command", "bound");
        w.field("kind", to_string(r.kind));
        if (a.m) w.field("m", *a.m);
        if (a.n) w.field("n", *a.n);
        if (a.s) w.field("s", *a.s);
        if (a.delta) w.field("delta", *a.delta);
        if (a.j) w.field("j", *a.j);
        if (a.c) w.field("c", *a.c);
        w.field("epsilon", r.epsilon);
        w.field("epsilon_raw", r.epsilon_raw);
        w.field("delta_spent", r.delta_spent);
        if (r.schedule) write_schedule(w, *r.schedule);
        w.end_object();
        out << '\n';
    } else if (fmt_ == Format::csv) {
        out << "kind,epsilon,epsilon_raw,delta_spent,schedule_j,schedule_delta\n";
        out << to_string(r.kind) << ',' << exact(r.epsilon) << ',' << exact(r.epsilon_raw) << ','
            << exact(r.delta_spent) << ',';
        if (r.schedule)
            out << output::join(r.schedule->j_values, ';') << ',' << output::join(r.schedule->delta_values, ';');
        else
            out << ',';
        out << '\n';
    } else {
        out << "kind         " << to_string(r.kind) << '\n'
            << "epsilon      " << rounded(r.epsilon) << '\n'
            << "epsilon_raw  " << rounded(r.epsilon_raw) << '\n'
            << "delta_spent  " << rounded(r.delta_spent) << '\n';
        if (r.schedule) {
            out << "schedule j   ";
            for (double v : r.schedule->j_values) out << rounded(v) << ' ';
            out << "\nschedule d   ";
            for (double v : r.schedule->delta_values) out << rounded(v) << ' ';
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeArgs
{
    std::string format = "json";
    std::optional<std::int64_t> m, n, s;
    std::optional<double> delta;
    std::size_t t = 2;
    double delta_increment = 1e-4;
    std::string j_grid = "integer";
    double c = 3.0;
    bool brute_force_check = false;
    std::uint64_t cap = kDefaultEnumerationCap;
};

int run_optimize(const OptimizeArgs& a, std::ostream& out)
{
    const BoundContext ctx =
        BoundContext::make(require(a.m, "--m"), require(a.n, "--n"), require(a.delta, "--delta"));
    const EnsembleSpec ens{require(a.s, "--s"), std::nullopt};
    ens.validate(ctx);

    OptimizerGrid grid;
    grid.t = a.t;
    grid.delta_increment = a.delta_increment;
    if (a.j_grid == "geometric")
        grid.j_candidates = OptimizerGrid::geometric_candidates(ens.s, a.c, a.t);
    else if (a.j_grid != "integer")
        grid.j_candidates = parse_list(a.j_grid, "--j-grid");

    const ScheduleOptimum opt = optimize_schedule(ctx, ens, grid);
    std::optional<ScheduleOptimum> brute;
    bool match = true;
    if (a.brute_force_check) {
        brute = brute_force_optimize(ctx, ens, grid, a.cap);
        match = brute->bound.epsilon_raw == opt.bound.epsilon_raw && brute->schedule == opt.schedule;
    }

    const Format f = parse_format(a.format);
    if (f == Format::json) {
        JsonWriter w(out);
        w.begin_object();
        w.field("command", "optimize");
        w.field("m", ctx.m).field("n", ctx.n).field("s", ens.s).field("delta", ctx.delta);
        w.field("t", static_cast<std::uint64_t>(grid.t));
        w.field("delta_increment", grid.delta_increment);
        w.field("epsilon", opt.bound.epsilon);
        w.field("epsilon_raw", opt.bound.epsilon_raw);
        w.field("delta_spent", opt.bound.delta_spent);
        write_schedule(w, opt.schedule);
        if (brute) {
            w.key("brute_force").begin_object();
            w.field("epsilon_raw", brute->bound.epsilon_raw);
            write_schedule(w, brute->schedule);
            w.field("match", match);
            w.end_object();
        }
        w.end_object();
        out << '\n';
    } else if (f == Format::csv) {
        out << "epsilon,epsilon_raw,delta_spent,schedule_j,schedule_delta";
        if (brute) out << ",brute_force_epsilon_raw,match";
        out << '\n'
            << exact(opt.bound.epsilon) << ',' << exact(opt.bound.epsilon_raw) << ','
            << exact(opt.bound.delta_spent) << ',' << output::join(opt.schedule.j_values, ';') << ','
            << output::join(opt.schedule.delta_values, ';');
        if (brute) out << ',' << exact(brute->bound.epsilon_raw) << ',' << (match ? "true" : "false");
        out << '\n';
    } else {
        print_bound({}, opt.bound, Format::human, out);
        if (brute)
            out << "brute force  " << rounded(brute->bound.epsilon_raw) << (match ? " (match)" : " (MISMATCH)")
                << '\n';
    }
    if (!match)
        throw OracleMismatch(fmt::format("dynamic program gave {} but enumeration gave {}",
                                         exact(opt.bound.epsilon_raw), exact(brute->bound.epsilon_raw)));
    return kSuccess;
}

// ---------------------------------------------------------------------------
// knn-gibbs

struct KnnArgs
{
    std::string format = "json";
    std::string data;
    std::size_t n_holdout = 1;
    std::size_t k = 1;
    bool oracle = false;
    bool header = false;
    std::string delimiter = ",";
    std::uint64_t cap = kDefaultSplitCap;
};

int run_knn(const KnnArgs& a, std::ostream& out)
{
    if (a.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    const LabeledDataset data = read_dataset_file(a.data, a.n_holdout, {a.delimiter[0], a.header});
    const double dp = gibbs_average_holdout_error(data, a.k);
    std::optional<double> oracle;
    if (a.oracle) oracle = brute_force_average_holdout_error(data, a.k, a.cap);
    const bool match = !oracle || std::abs(*oracle - dp) <= 1e-12;

    const Format f = parse_format(a.format);
    if (f == Format::json) {
        JsonWriter w(out);
        w.begin_object();
        w.field("command", "knn-gibbs");
        w.field("points", static_cast<std::uint64_t>(data.size()));
        w.field("r", static_cast<std::uint64_t>(data.r));
        w.field("n", static_cast<std::uint64_t>(data.n));
        w.field("k", static_cast<std::uint64_t>(a.k));
        w.field("average_holdout_error", dp);
        if (oracle) {
            w.field("oracle_average_holdout_error", *oracle);
            w.field("match", match);
        }
        w.end_object();
        out << '\n';
    } else if (f == Format::csv) {
        out << "points,r,n,k,average_holdout_error" << (oracle ? ",oracle_average_holdout_error,match" : "")
            << '\n';
        out << data.size() << ',' << data.r << ',' << data.n << ',' << a.k << ',' << exact(dp);
        if (oracle) out << ',' << exact(*oracle) << ',' << (match ? "true" : "false");
        out << '\n';
    } else {
        out << "average holdout error  " << rounded(dp) << '\n';
        if (oracle) out << "split enumeration      " << rounded(*oracle) << (match ? "" : "  MISMATCH") << '\n';
    }
    if (!match)
        throw OracleMismatch(
            fmt::format("split DP gave {} but enumeration gave {}", exact(dp), exact(*oracle)));
    return kSuccess;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs
{
    std::string format = "json";
    std::optional<std::string> config;
    std::optional<std::int64_t> m, n, s;
    std::optional<double> delta;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    double lo = 0.0;
    double hi = 0.5;
    std::string rule = "lowest_s";
    std::optional<double> tau;
    unsigned threads = 1;
    std::vector<std::string> bounds;
};

// "kind[:key=value,...]" with keys j, c, t, inc.
BoundUnderTest parse_bound_flag(const std::string& spec, double delta)
{
    BoundUnderTest b;
    const auto colon = spec.find(':');
    b.kind = parse_kind(spec.substr(0, colon));
    b.label = spec;
    if (colon == std::string::npos) {
        if (b.kind == BoundKind::telescoping) b.grid = OptimizerGrid{delta / 100.0, {}, 2};
        return b;
    }
    std::optional<std::size_t> t;
    std::optional<double> inc;
    std::istringstream in(spec.substr(colon + 1));
    std::string kv;
    while (std::getline(in, kv, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError(fmt::format("--bound '{}': expected key=value", spec));
        const std::string key = kv.substr(0, eq);
        const auto vals = parse_list(kv.substr(eq + 1), "--bound");
        if (vals.size() != 1) throw UsageError(fmt::format("--bound '{}': bad value for {}", spec, key));
        if (key == "j")
            b.j = vals[0];
        else if (key == "c")
            b.c = vals[0];
        else if (key == "t")
            t = static_cast<std::size_t>(vals[0]);
        else if (key == "inc")
            inc = vals[0];
        else
            throw UsageError(fmt::format("--bound '{}': unknown key '{}'", spec, key));
    }
    if (b.kind == BoundKind::telescoping) b.grid = OptimizerGrid{inc.value_or(delta / 100.0), {}, t.value_or(2)};
    return b;
}

ExperimentConfig config_from_flags(const SimulateArgs& a)
{
    ExperimentConfig cfg;
    const auto m = require(a.m, "--m");
    if (m < 1) throw PreconditionError("--m must be positive");
    cfg.world = SyntheticWorld::uniform_on_interval(static_cast<std::size_t>(m), a.lo, a.hi, require(a.n, "--n"),
                                                    a.seed);
    cfg.s = require(a.s, "--s");
    cfg.delta = require(a.delta, "--delta");
    cfg.trials = a.trials;
    cfg.threads = a.threads;
    if (a.rule == "lowest_s")
        cfg.rule = SelectionRule::lowest();
    else if (a.rule == "random_s")
        cfg.rule = SelectionRule::random();
    else
        cfg.rule = SelectionRule::threshold(require(a.tau, "--tau"));

    std::vector<std::string> specs = a.bounds;
    if (specs.empty()) {
        specs = {"ensemble_uniform", "closed_form:c=3", "analytic:c=3"};
        for (double j : {1.0, 5.0, 20.0})
            if (j <= static_cast<double>(cfg.s)) specs.push_back(fmt::format("ensemble_nearly_uniform:j={}", j));
    }
    for (const auto& spec : specs) cfg.bounds.push_back(parse_bound_flag(spec, cfg.delta));
    return cfg;
}

int run_simulate(const SimulateArgs& a, std::ostream& out)
{
    const ExperimentConfig cfg = a.config ? load_experiment_config(*a.config) : config_from_flags(a);
    const CoverageReport report = run_coverage_experiment(cfg);

    const Format f = parse_format(a.format);
    if (f == Format::json) {
        JsonWriter w(out);
        w.begin_object();
        w.field("command", "simulate");
        w.field("m", static_cast<std::uint64_t>(cfg.world.m()));
        w.field("n", cfg.world.n);
        w.field("s", cfg.s);
        w.field("selection", to_string(cfg.rule));
        w.field("trials", report.trials);
        w.field("seed", report.seed);
        w.field("delta", report.delta);
        w.field("confidence_level", report.confidence_level);
        w.field("sound", report.sound());
        w.key("bounds").begin_array();
        for (const auto& k : report.bounds) {
            w.begin_object();
            w.field("label", k.label);
            w.field("kind", to_string(k.kind));
            w.field("epsilon", k.epsilon);
            w.field("violations", k.violations);
            w.field("frequency", k.frequency);
            w.field("upper_confidence_limit", k.upper_confidence_limit);
            w.end_object();
        }
        w.end_array();
        w.end_object();
        out << '\n';
    } else if (f == Format::csv) {
        out << "label,kind,epsilon,violations,trials,frequency,upper_confidence_limit\n";
        for (const auto& k : report.bounds)
            out << '"' << k.label << "\"," << to_string(k.kind) << ',' << exact(k.epsilon) << ',' << k.violations
                << ',' << report.trials << ',' << exact(k.frequency) << ',' << exact(k.upper_confidence_limit)
                << '\n';
    } else {
        out << fmt::format("{} trials, seed {}, delta {}\n", report.trials, report.seed, report.delta);
        for (const auto& k : report.bounds)
            out << fmt::format("{:<40} eps {}  violations {:>6}  freq {}  ucl({}) {}\n", k.label,
                               rounded(k.epsilon), k.violations, rounded(k.frequency), report.confidence_level,
                               rounded(k.upper_confidence_limit));
    }
    return report.sound() ? kSuccess : kCoverageFailure;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs
{
    std::string format = "json";
    std::string kind = "analytic";
    std::optional<std::int64_t> n;
    std::optional<double> delta;
    double c = 3.0;
    std::optional<double> j;
    std::string m_list;
    std::optional<std::int64_t> ratio;
    std::optional<std::string> s_list;
};

struct SweepRow
{
    std::int64_t m = 0;
    std::int64_t s = 0;
    BoundResult bound;
};

int run_sweep(const SweepArgs& a, std::ostream& out)
{
    const BoundKind kind = parse_kind(a.kind);
    const auto n = require(a.n, "--n");
    const auto delta = require(a.delta, "--delta");
    if (a.ratio.has_value() == a.s_list.has_value()) throw UsageError("give exactly one of --ratio and --s-list");

    auto as_count = [](double v, const char* flag) {
        if (v < 1.0 || v != std::floor(v)) throw PreconditionError(fmt::format("{}: {} is not a count", flag, v));
        return static_cast<std::int64_t>(v);
    };

    std::vector<SweepRow> rows;
    for (double mv : parse_list(a.m_list, "--m-list")) {
        const std::int64_t m = as_count(mv, "--m-list");
        std::vector<std::int64_t> sizes;
        if (a.ratio) {
            if (*a.ratio < 1 || m % *a.ratio != 0)
                throw PreconditionError(fmt::format("--ratio {} does not divide m={}", *a.ratio, m));
            sizes.push_back(m / *a.ratio);
        } else {
            for (double sv : parse_list(*a.s_list, "--s-list")) sizes.push_back(as_count(sv, "--s-list"));
        }
        for (std::int64_t s : sizes) {
            if (s > m) continue;
            const BoundContext ctx = BoundContext::make(m, n, delta);
            const EnsembleSpec ens{s, std::nullopt};
            SweepRow row{m, s, {}};
            switch (kind) {
            case BoundKind::uniform:
            case BoundKind::ensemble_uniform: row.bound = ensemble_uniform_epsilon(ctx, ens); break;
            case BoundKind::ensemble_nearly_uniform:
                row.bound = ensemble_nearly_uniform_epsilon(ctx, ens, require(a.j, "--j"));
                break;
            case BoundKind::closed_form: row.bound = epsilon_star(ctx, ens, a.c); break;
            case BoundKind::analytic_envelope: row.bound = epsilon_star_analytic_bound(ctx, ens, a.c); break;
            default: throw UsageError(fmt::format("sweep does not support kind '{}'", to_string(kind)));
            }
            rows.push_back(std::move(row));
        }
    }

    const Format f = parse_format(a.format);
    if (f == Format::json) {
        JsonWriter w(out);
        w.begin_object();
        w.field("command", "sweep");
        w.field("kind", to_string(kind));
        w.field("n", n).field("delta", delta).field("c", a.c);
        w.key("rows").begin_array();
        for (const auto& r : rows) {
            w.begin_object();
            w.field("m", r.m).field("s", r.s);
            w.field("epsilon", r.bound.epsilon).field("epsilon_raw", r.bound.epsilon_raw);
            w.end_object();
        }
        w.end_array();
        w.end_object();
        out << '\n';
    } else if (f == Format::csv) {
        out << "m,s,n,delta,kind,epsilon,epsilon_raw\n";
        for (const auto& r : rows)
            out << r.m << ',' << r.s << ',' << n << ',' << exact(delta) << ',' << to_string(kind) << ','
                << exact(r.bound.epsilon) << ',' << exact(r.bound.epsilon_raw) << '\n';
    } else {
        out << fmt::format("{:>10} {:>10} {:>10}\n", "m", "s", "epsilon");
        for (const auto& r : rows) out << fmt::format("{:>10} {:>10} {:>10}\n", r.m, r.s, rounded(r.bound.epsilon));
    }
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Error bounds for equally weighted Gibbs ensembles", "ensval"};
    app.require_subcommand(1);

    BoundArgs bound;
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate one error bound");
    add_format_option(bound_cmd, bound.format);
    bound_cmd->add_option("--kind", bound.kind, "Bound kind")->required();
    bound_cmd->add_option("--m", bound.m, "Hypothesis classifiers");
    bound_cmd->add_option("--n", bound.n, "Validation examples per classifier");
    bound_cmd->add_option("--s", bound.s, "Ensemble size");
    bound_cmd->add_option("--delta", bound.delta, "Confidence budget");
    bound_cmd->add_option("--j", bound.j, "Allowed misvalidations");
    bound_cmd->add_option("--c", bound.c, "Closed-form schedule decay");
    bound_cmd->add_option("--schedule-j", bound.schedule_j, "Telescoping j_1..j_t, comma separated");
    bound_cmd->add_option("--schedule-delta", bound.schedule_delta,
                          "Telescoping delta_1..delta_{t+1}, comma separated");
    bound_cmd->add_option("--rates", bound.rates, "File of observed validation error rates")
        ->check(CLI::ExistingFile);
    bound_cmd->add_option("--base-kind", bound.base_kind, "Gibbs bound kind extended by full_classifier");
    bound_cmd->add_option("--gibbs-epsilon", bound.gibbs_epsilon, "Gibbs bound extended by full_classifier");
    bound_cmd->add_option("--disagreement", bound.disagreement, "Full/Gibbs disagreement rate");

    OptimizeArgs opt;
    auto* opt_cmd = app.add_subcommand("optimize", "Optimize a telescoping schedule");
    add_format_option(opt_cmd, opt.format);
    opt_cmd->add_option("--m", opt.m)->required();
    opt_cmd->add_option("--n", opt.n)->required();
    opt_cmd->add_option("--s", opt.s)->required();
    opt_cmd->add_option("--delta", opt.delta)->required();
    opt_cmd->add_option("--t", opt.t, "Stages")->capture_default_str();
    opt_cmd->add_option("--delta-increment", opt.delta_increment)->capture_default_str();
    opt_cmd->add_option("--j-grid", opt.j_grid, "integer, geometric, or a comma list")->capture_default_str();
    opt_cmd->add_option("--c", opt.c, "Decay for the geometric j grid")->capture_default_str();
    opt_cmd->add_flag("--brute-force-check", opt.brute_force_check, "Cross-check by enumeration");
    opt_cmd->add_option("--cap", opt.cap, "Enumeration cap")->capture_default_str();

    KnnArgs knn;
    auto* knn_cmd = app.add_subcommand("knn-gibbs", "Exact average holdout error of k-NN over all splits");
    add_format_option(knn_cmd, knn.format);
    knn_cmd->add_option("--data", knn.data, "Dataset file")->required()->check(CLI::ExistingFile);
    knn_cmd->add_option("--n-holdout", knn.n_holdout, "Holdout points per split")->required();
    knn_cmd->add_option("--k", knn.k, "Neighbors (odd)")->capture_default_str();
    knn_cmd->add_flag("--oracle", knn.oracle, "Cross-check by enumerating splits");
    knn_cmd->add_flag("--header", knn.header, "First row is a header");
    knn_cmd->add_option("--delimiter", knn.delimiter)->capture_default_str();
    knn_cmd->add_option("--cap", knn.cap, "Split enumeration cap")->capture_default_str();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo bound coverage experiment");
    add_format_option(sim_cmd, sim.format);
    sim_cmd->add_option("--config", sim.config, "JSON experiment file")->check(CLI::ExistingFile);
    sim_cmd->add_option("--m", sim.m);
    sim_cmd->add_option("--n", sim.n);
    sim_cmd->add_option("--s", sim.s);
    sim_cmd->add_option("--delta", sim.delta);
    sim_cmd->add_option("--trials", sim.trials)->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
    sim_cmd->add_option("--lo", sim.lo, "Lower end of the true error rates")->capture_default_str();
    sim_cmd->add_option("--hi", sim.hi, "Upper end of the true error rates")->capture_default_str();
    sim_cmd->add_option("--rule", sim.rule)
        ->check(CLI::IsMember({"lowest_s", "random_s", "threshold"}))
        ->capture_default_str();
    sim_cmd->add_option("--tau", sim.tau, "Threshold for --rule threshold");
    sim_cmd->add_option("--threads", sim.threads)->capture_default_str();
    sim_cmd->add_option("--bound", sim.bounds, "kind[:j=..,c=..,t=..,inc=..], repeatable");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate a bound over (m, s)");
    add_format_option(sweep_cmd, sweep.format);
    sweep_cmd->add_option("--kind", sweep.kind)->capture_default_str();
    sweep_cmd->add_option("--n", sweep.n)->required();
    sweep_cmd->add_option("--delta", sweep.delta)->required();
    sweep_cmd->add_option("--c", sweep.c)->capture_default_str();
    sweep_cmd->add_option("--j", sweep.j);
    sweep_cmd->add_option("--m-list", sweep.m_list, "Comma separated m values")->required();
    sweep_cmd->add_option("--ratio", sweep.ratio, "Fixed m/s");
    sweep_cmd->add_option("--s-list", sweep.s_list, "Comma separated s values");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (bound_cmd->parsed()) {
            const BoundResult r = evaluate_bound(bound, parse_kind(bound.kind));
            print_bound(bound, r, parse_format(bound.format), out);
            return kSuccess;
        }
        if (opt_cmd->parsed()) return run_optimize(opt, out);
        if (knn_cmd->parsed()) return run_knn(knn, out);
        if (sim_cmd->parsed()) return run_simulate(sim, out);
        if (sweep_cmd->parsed()) return run_sweep(sweep, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const PreconditionError& e) {
        err << "precondition violated: " << e.what() << '\n';
        return kPreconditionViolation;
    } catch (const OracleMismatch& e) {
        err << "oracle mismatch: " << e.what() << '\n';
        return kOracleMismatch;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

}  // namespace ensval::cli
