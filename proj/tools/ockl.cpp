// ockl: generate streams, run experiments, sweep the coreset ratio, and
// summarize runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ockl/config.hpp"
#include "ockl/datagen.hpp"
#include "ockl/error.hpp"
#include "ockl/report.hpp"
#include "ockl/scheduler.hpp"
#include "ockl/stream_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ockl::fail("io_error", "cannot write " + path.string());
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) ockl::fail("io_error", "cannot create " + dir.string() + ": " + ec.message());
}

struct GenArgs {
  ockl::GenerationConfig config = ockl::default_generation_config();
  std::string mode = "redundancy-free";
  std::optional<std::uint64_t> stream_seed;
  std::string out;
};

int cmd_gen(GenArgs& a) {
  a.config.stream.mode = ockl::stream_mode_from_string(a.mode);
  a.config.stream.seed = a.stream_seed.value_or(a.config.universe.seed);
  const auto universe = ockl::generate_universe(a.config.universe);
  const auto stream = ockl::build_streams(universe, a.config.stream);

  const fs::path dir(a.out);
  make_dir(dir);
  {
    auto out = open_out(dir / "knowledge.jsonl");
    ockl::write_knowledge_jsonl(stream, out);
  }
  {
    auto out = open_out(dir / "qa.jsonl");
    ockl::write_qa_jsonl(stream, out);
  }
  {
    auto out = open_out(dir / "stats.json");
    out << ockl::to_json(ockl::compute_stream_stats(stream, universe.templates)).dump(2) << '\n';
  }
  const json manifest = {{"tool_version", ockl::kToolVersion}, {"generate", ockl::to_json(a.config)}};
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  std::cout << json{{"steps", stream.steps.size()},
                    {"knowledge_items", stream.knowledge_count()},
                    {"qa_items", stream.qa_count()},
                    {"mode", ockl::to_string(stream.mode)}}
                   .dump()
            << '\n';
  return 0;
}

struct RunOverrides {
  std::string coreset;
  std::optional<double> ratio;
};

int cmd_run(const std::string& config_path, const std::string& out_dir, const RunOverrides& o) {
  auto config = ockl::load_run_config(config_path);
  if (!o.coreset.empty()) config.coreset.method = ockl::coreset_method_from_string(o.coreset);
  if (o.ratio) config.coreset.ratio = *o.ratio;
  const fs::path dir(out_dir);
  make_dir(dir);
  // Rows are written as steps complete so a failed run keeps its finished steps.
  auto csv = open_out(dir / "metrics.csv");
  csv << ockl::kMetricsHeader << '\n';
  csv.flush();
  const auto result = ockl::run_experiment(config, [&](const ockl::MetricsRecord& r) {
    csv << ockl::metrics_csv_row(r) << '\n';
    csv.flush();
  });
  csv.close();
  ockl::write_run(result, dir);
  std::cout << ockl::summarize(result).dump() << '\n';
  return 0;
}

int cmd_sweep(const std::string& preset, const std::string& config_path, const std::string& out_dir) {
  if (preset != "ratio") ockl::fail("invalid_argument", "unknown preset '" + preset + "' (known: ratio)");
  const auto config = ockl::load_run_config(config_path);
  const auto cells = ockl::ratio_sweep(config);
  ockl::write_sweep_table(cells, std::cout);
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    make_dir(dir);
    {
      auto out = open_out(dir / "sweep.csv");
      ockl::write_sweep_table(cells, out);
    }
    for (const auto& c : cells) {
      if (c.result) ockl::write_run(*c.result, dir / ("r" + ockl::format_number(c.ratio)));
    }
  }
  int failed = 0;
  for (const auto& c : cells) {
    if (!c.error.empty()) {
      print_error("sweep_cell_failed", "ratio " + ockl::format_number(c.ratio) + ": " + c.error);
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_stats(const std::string& stream_path, const std::string& qa_path) {
  fs::path knowledge(stream_path);
  if (fs::is_directory(knowledge)) knowledge /= "knowledge.jsonl";
  fs::path qa = qa_path.empty() ? knowledge.parent_path() / "qa.jsonl" : fs::path(qa_path);
  std::ifstream kin(knowledge);
  if (!kin) ockl::fail("io_error", "cannot read " + knowledge.string());
  std::ifstream qin;
  std::istringstream empty;
  std::istream* qstream = &empty;
  if (fs::exists(qa)) {
    qin.open(qa);
    qstream = &qin;
  }
  const auto stream = ockl::read_stream(kin, *qstream);
  const auto stats = ockl::compute_stream_stats(stream, ockl::parsing_templates());
  json j = ockl::to_json(stats);
  j["steps"] = stream.steps.size();
  j["mode"] = ockl::to_string(stream.mode);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_report(const std::string& run_dir) {
  std::cout << ockl::report_run(run_dir).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online continual knowledge learning simulator"};
  app.set_version_flag("--version", ockl::kToolVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic knowledge / QA stream");
  g->add_option("--seed", gen.config.universe.seed, "Universe seed")->capture_default_str();
  g->add_option("--entities", gen.config.universe.n_entities, "Number of entities")
      ->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--relations", gen.config.universe.n_relations, "Number of relations")
      ->capture_default_str()->check(CLI::Range(1, ockl::kMaxRelations));
  g->add_option("--variant-fraction", gen.config.universe.variant_fraction,
                "Fraction of time-variant facts")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  g->add_option("--horizon", gen.config.universe.horizon, "Days covered by the stream")
      ->capture_default_str();
  g->add_option("--updates-per-variant", gen.config.universe.updates_per_variant,
                "Updates per time-variant fact")
      ->capture_default_str();
  g->add_option("--steps", gen.config.stream.n_steps, "Number of stream steps")->capture_default_str();
  g->add_option("--items-per-step", gen.config.stream.items_per_step,
                "Knowledge items per step (redundant mode pads to this)")
      ->capture_default_str();
  g->add_option("--mode", gen.mode, "Stream mode")
      ->capture_default_str()->check(CLI::IsMember({"redundant", "redundancy-free"}));
  g->add_option("--stream-seed", gen.stream_seed, "Stream seed (defaults to --seed)");
  g->add_option("--out", gen.out, "Output directory")->required();

  std::string run_config;
  std::string run_out;
  auto* r = app.add_subcommand("run", "Run one experiment");
  r->add_option("--config", run_config, "Run config (JSON)")->required();
  r->add_option("--out", run_out, "Output directory")->required();
  RunOverrides overrides;
  r->add_option("--coreset", overrides.coreset, "Override coreset.method")
      ->check(CLI::IsMember({"none", "random", "kcenter", "model"}));
  r->add_option("--ratio", overrides.ratio, "Override coreset.ratio")->check(CLI::Range(0.0, 1.0));

  std::string sweep_preset;
  std::string sweep_config;
  std::string sweep_out;
  auto* s = app.add_subcommand("sweep", "Run a preset sweep");
  s->add_option("--preset", sweep_preset, "Preset name")->required()->check(CLI::IsMember({"ratio"}));
  s->add_option("--config", sweep_config, "Base run config (JSON)")->required();
  s->add_option("--out", sweep_out, "Write the table and each cell's outputs here");

  std::string stats_stream;
  std::string stats_qa;
  auto* st = app.add_subcommand("stats", "Stream statistics");
  st->add_option("--stream", stats_stream, "knowledge.jsonl or a gen output directory")->required();
  st->add_option("--qa", stats_qa, "qa.jsonl (defaults to the sibling of --stream)");

  std::string report_dir;
  auto* rp = app.add_subcommand("report", "Summarize a finished run directory");
  rp->add_option("--run", report_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage_error", e.what());
    return 2;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*r) return cmd_run(run_config, run_out, overrides);
    if (*s) return cmd_sweep(sweep_preset, sweep_config, sweep_out);
    if (*st) return cmd_stats(stats_stream, stats_qa);
    if (*rp) return cmd_report(report_dir);
  } catch (const ockl::Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 1;
  }
  return 0;
}
