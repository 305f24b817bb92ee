#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "ockl/config.hpp"
#include "ockl/error.hpp"
#include "ockl/report.hpp"

using namespace ockl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_json() {
  return json::parse(R"({
    "stream": {"generate": {"seed": 3, "entities": 12, "relations": 4, "variant_fraction": 0.5,
                            "horizon": 60, "steps": 5, "items_per_step": 10, "mode": "redundant"}},
    "learner": {"kind": "hashed_softmax", "feature_dim": 128},
    "strategy": {"kind": "rehearsal", "m0": 0.5, "gamma": 0.9},
    "coreset": {"method": "kcenter", "ratio": 0.5},
    "budget": {"mode": "fixed", "seconds": 0.05},
    "seed": 4,
    "kg_probes": 8
  })");
}

std::string config_error_for(const json& j) {
  try {
    run_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "config_error");
    return e.what();
  }
  return "";
}

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ockl_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
  const auto c = run_config_from_json(base_json());
  EXPECT_EQ(c.learner.kind, LearnerKind::HashedSoftmax);
  EXPECT_EQ(c.strategy.kind, StrategyKind::Rehearsal);
  EXPECT_EQ(c.coreset.method, CoresetMethod::KCenter);
  EXPECT_EQ(c.budget.mode, BudgetMode::Fixed);
  EXPECT_EQ(c.stream.generate->stream.mode, StreamMode::Redundant);
  EXPECT_EQ(c.stream.generate->stream.seed, 3u);
  const json once = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(once)), once);
  // Manifests are accepted as configs.
  const json manifest = {{"tool_version", kToolVersion}, {"config", once}};
  EXPECT_EQ(to_json(run_config_from_json(manifest)), once);
}

TEST(Config, ErrorsNameTheKey) {
  auto j = base_json();
  j["learner"]["capacity"] = -3;
  EXPECT_NE(config_error_for(j).find("learner.capacity"), std::string::npos);
  j = base_json();
  j["coreset"]["ratio"] = 1.5;
  EXPECT_NE(config_error_for(j).find("coreset.ratio"), std::string::npos);
  j = base_json();
  j["strategy"]["colour"] = "blue";
  EXPECT_NE(config_error_for(j).find("strategy.colour"), std::string::npos);
  j = base_json();
  j["budget"]["seconds"] = -1;
  EXPECT_NE(config_error_for(j).find("budget.seconds"), std::string::npos);
  j = base_json();
  j["stream"]["generate"]["mode"] = "sometimes";
  EXPECT_NE(config_error_for(j).find("stream.generate.mode"), std::string::npos);
  j = base_json();
  j.erase("stream");
  EXPECT_NE(config_error_for(j).find("stream"), std::string::npos);
  j = base_json();
  j["clock"] = 3;
  EXPECT_NE(config_error_for(j).find("clock"), std::string::npos);
}

TEST(Report, CsvFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  MetricsRecord r;
  r.t = 1;
  r.em = 0.25;
  r.tokens_trained = 12;
  r.discarded_items = 3;
  EXPECT_EQ(metrics_csv_row(r), "1,0.25,nan,nan,nan,0,0,0,12,0,3");
}

TEST(Report, RunOutputsAreConsistentAndDeterministic) {
  const auto c = run_config_from_json(base_json());
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  const auto da = temp_dir("a"), db = temp_dir("b");
  write_run(a, da);
  write_run(b, db);
  EXPECT_EQ(slurp(da / "summary.json"), slurp(db / "summary.json"));
  EXPECT_EQ(slurp(da / "metrics.csv"), slurp(db / "metrics.csv"));

  std::istringstream csv(slurp(da / "metrics.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 5);

  const json s = json::parse(slurp(da / "summary.json"));
  const auto& last = a.records.back();
  EXPECT_EQ(s["final"]["kar"].get<double>(),
            kar(s["final"]["fwt"].get<double>(), s["final"]["bwt"].get<double>(),
                static_cast<double>(s["totals"]["tokens_trained"].get<std::int64_t>()),
                s["totals"]["train_time_s"].get<double>()));
  EXPECT_EQ(s["totals"]["tokens_trained"].get<std::int64_t>(), last.tokens_trained);
  EXPECT_DOUBLE_EQ(s["display"]["bwt"].get<double>(), *last.bwt * 100.0);

  for (const char* name : {"em", "bwt", "fwt", "kar", "kg_alignment", "kg_forgetting", "kg_updating"}) {
    EXPECT_TRUE(fs::exists(da / "plotdata" / (std::string(name) + ".csv"))) << name;
  }

  const auto back = read_metrics_csv(da / "metrics.csv");
  ASSERT_EQ(back.size(), a.records.size());
  EXPECT_EQ(back.back().tokens_trained, last.tokens_trained);
  EXPECT_TRUE(report_run(da)["consistent_with_summary"].get<bool>());

  // The manifest alone reproduces the run.
  const auto again = run_experiment(load_run_config(da / "manifest.json"));
  EXPECT_EQ(again.records, a.records);
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST(Report, UnwritableDirectory) {
  const auto c = run_config_from_json(base_json());
  const auto r = run_experiment(c);
  try {
    write_run(r, "/proc/ockl-cannot-write-here");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "io_error");
  }
}

TEST(Sweep, FourCellsAndTable) {
  auto c = run_config_from_json(base_json());
  c.budget.mode = BudgetMode::Unlimited;
  const auto cells = ratio_sweep(c);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& cell : cells) EXPECT_TRUE(cell.result) << cell.error;
  std::ostringstream table;
  write_sweep_table(cells, table);
  std::istringstream in(table.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Sweep, FailedCellDoesNotStopOthers) {
  auto c = run_config_from_json(base_json());
  c.strategy.kind = StrategyKind::LowRank;
  c.strategy.rank = 100000;  // rejected by the learner in every cell
  const auto cells = ratio_sweep(c);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& cell : cells) EXPECT_FALSE(cell.error.empty());
}
