#include "ensval/cli.hpp"
#include "ensval/bounds.hpp"
#include "ensval/knn_holdout.hpp"
#include "ensval/telescope_opt.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ensval;
using nlohmann::json;

namespace {

struct Invocation
{
    int status = -1;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Invocation r;
    r.status = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string data_file(const std::string& name)
{
    const char* dir = std::getenv("ENSVAL_DATA_DIR");
    return (std::filesystem::path(dir ? dir : "data") / name).string();
}

}  // namespace

TEST(Cli, UniformBoundRoundTripsExactly)
{
    const auto r = invoke({"bound", "--kind", "uniform", "--m", "100", "--n", "5000", "--delta", "0.05"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("epsilon").get<double>(), uniform_epsilon(BoundContext::make(100, 5000, 0.05)).epsilon);
    EXPECT_EQ(j.at("kind"), "uniform");
}

TEST(Cli, AnalyticAlias)
{
    const auto r = invoke({"bound", "--kind", "analytic", "--c", "3", "--m", "1000", "--s", "10", "--n", "500",
                           "--delta", "0.05"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const double expected =
        epsilon_star_analytic_bound(BoundContext::make(1000, 500, 0.05), {10, std::nullopt}, 3.0).epsilon;
    EXPECT_EQ(json::parse(r.out).at("epsilon").get<double>(), expected);
    EXPECT_NEAR(expected, 0.19342072480154473, 1e-15);
}

TEST(Cli, TelescopingScheduleFlags)
{
    const auto r = invoke({"bound", "--kind", "telescoping", "--m", "1000", "--n", "500", "--s", "100", "--delta",
                           "0.05", "--schedule-j", "10,2", "--schedule-delta", "0.03,0.015,0.005"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const auto j = json::parse(r.out);
    const Schedule sched{{10, 2}, {0.03, 0.015, 0.005}};
    EXPECT_EQ(j.at("epsilon").get<double>(),
              telescoping_epsilon(BoundContext::make(1000, 500, 0.05), {100, std::nullopt}, sched).epsilon);
    EXPECT_EQ(j.at("schedule").at("delta").get<std::vector<double>>(), sched.delta_values);
}

TEST(Cli, ObservedRatesFromFile)
{
    const auto path = (std::filesystem::temp_directory_path() / "ensval_cli_rates.txt").string();
    std::ofstream(path) << "0.1\n0.2\n0.3\n0.4\n";
    const auto r = invoke({"bound", "--kind", "observed", "--m", "1000", "--n", "500", "--s", "4", "--delta", "0.05",
                           "--j", "2", "--rates", path});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    EXPECT_NEAR(json::parse(r.out).at("epsilon").get<double>(), 0.47298525912188081, 1e-15);
    std::filesystem::remove(path);
}

TEST(Cli, FullClassifier)
{
    const auto r = invoke({"bound", "--kind", "full", "--base-kind", "uniform", "--m", "100", "--n", "5000",
                           "--delta", "0.05", "--disagreement", "0.1"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    EXPECT_EQ(json::parse(r.out).at("epsilon_raw").get<double>(),
              uniform_epsilon(BoundContext::make(100, 5000, 0.05)).epsilon + 0.1);
}

TEST(Cli, OutputIsByteIdenticalAcrossInvocations)
{
    const std::vector<std::vector<std::string>> commands{
        {"bound", "--kind", "closed_form", "--m", "1000", "--n", "500", "--s", "100", "--delta", "0.05", "--c", "3"},
        {"optimize", "--m", "50", "--n", "100", "--s", "10", "--delta", "0.1", "--t", "2", "--delta-increment",
         "0.01"},
        {"simulate", "--m", "50", "--n", "100", "--s", "5", "--delta", "0.05", "--trials", "200", "--threads", "3"},
        {"sweep", "--n", "500", "--delta", "0.05", "--m-list", "1000,10000", "--ratio", "100", "--format", "csv"},
    };
    for (const auto& c : commands) {
        const auto a = invoke(c);
        const auto b = invoke(c);
        EXPECT_EQ(a.status, cli::kSuccess) << c.front() << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << c.front();
        EXPECT_FALSE(a.out.empty());
    }
}

TEST(Cli, OptimizeAgreesWithLibraryAndBruteForce)
{
    const auto r = invoke({"optimize", "--m", "50", "--n", "100", "--s", "10", "--delta", "0.1", "--t", "2",
                           "--delta-increment", "0.01", "--brute-force-check"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const auto j = json::parse(r.out);
    OptimizerGrid g;
    g.t = 2;
    g.delta_increment = 0.01;
    const auto lib = optimize_schedule(BoundContext::make(50, 100, 0.1), {10, std::nullopt}, g);
    EXPECT_EQ(j.at("epsilon").get<double>(), lib.bound.epsilon);
    EXPECT_EQ(j.at("schedule").at("j").get<std::vector<double>>(), lib.schedule.j_values);
    EXPECT_EQ(j.at("schedule").at("delta").get<std::vector<double>>(), lib.schedule.delta_values);
    EXPECT_TRUE(j.at("brute_force").at("match").get<bool>());
}

TEST(Cli, KnnGibbsWithOracle)
{
    const auto r = invoke({"knn-gibbs", "--data", data_file("three_points.csv"), "--n-holdout", "2", "--k", "1",
                           "--oracle"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_DOUBLE_EQ(j.at("average_holdout_error").get<double>(), 2.0 / 3.0);
    EXPECT_EQ(j.at("oracle_average_holdout_error").get<double>(), j.at("average_holdout_error").get<double>());
    EXPECT_TRUE(j.at("match").get<bool>());
}

TEST(Cli, SweepRows)
{
    const auto r = invoke({"sweep", "--kind", "analytic", "--n", "500", "--delta", "0.05", "--m-list",
                           "1000,10000,100000", "--ratio", "100", "--format", "csv"});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "m,s,n,delta,kind,epsilon,epsilon_raw");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    EXPECT_EQ(rows, 3);

    EXPECT_EQ(invoke({"sweep", "--n", "500", "--delta", "0.05", "--m-list", "1000", "--ratio", "3"}).status,
              cli::kPreconditionViolation);
    EXPECT_EQ(invoke({"sweep", "--n", "500", "--delta", "0.05", "--m-list", "1000"}).status, cli::kUsageError);
}

TEST(Cli, ExitStatuses)
{
    EXPECT_EQ(invoke({}).status, cli::kUsageError);
    EXPECT_EQ(invoke({"frobnicate"}).status, cli::kUsageError);
    EXPECT_EQ(invoke({"bound", "--m", "10", "--n", "10", "--delta", "0.1"}).status, cli::kUsageError);
    EXPECT_EQ(invoke({"bound", "--kind", "uniform", "--m", "10", "--n", "10", "--delta", "abc"}).status,
              cli::kUsageError);
    EXPECT_EQ(invoke({"bound", "--kind", "uniform", "--m", "10", "--n", "10", "--delta", "2"}).status,
              cli::kPreconditionViolation);
    EXPECT_EQ(invoke({"bound", "--kind", "ensemble_uniform", "--m", "10", "--n", "10", "--s", "11", "--delta",
                      "0.1"})
                  .status,
              cli::kPreconditionViolation);
    EXPECT_EQ(invoke({"knn-gibbs", "--data", "/nonexistent.csv", "--n-holdout", "1"}).status, cli::kUsageError);
    EXPECT_EQ(invoke({"knn-gibbs", "--data", data_file("three_points.csv"), "--n-holdout", "2", "--k", "3"}).status,
              cli::kPreconditionViolation);
    EXPECT_EQ(invoke({"bound", "--help"}).status, cli::kSuccess);
    const auto bad = invoke({"bound", "--kind", "uniform", "--m", "10", "--n", "10", "--delta", "2"});
    EXPECT_TRUE(bad.out.empty());
    EXPECT_FALSE(bad.err.empty());
}

TEST(Cli, SimulateFromConfigFile)
{
    const auto path = (std::filesystem::temp_directory_path() / "ensval_cli_config.json").string();
    std::ofstream(path) << R"({"seed": 3, "n": 200, "s": 5, "delta": 0.1, "trials": 100,
        "world": {"distribution": "uniform", "m": 60, "lo": 0, "hi": 0.5},
        "bounds": [{"kind": "ensemble_uniform"}, {"kind": "analytic_envelope", "c": 3}]})";
    const auto r = invoke({"simulate", "--config", path});
    ASSERT_EQ(r.status, cli::kSuccess) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("trials").get<int>(), 100);
    EXPECT_EQ(j.at("seed").get<int>(), 3);
    EXPECT_EQ(j.at("bounds").size(), 2u);
    EXPECT_TRUE(j.at("sound").get<bool>());
    std::filesystem::remove(path);
}
