#include "ockl/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ockl/error.hpp"

namespace ockl {

using nlohmann::json;

namespace {

std::string opt(const std::optional<double>& v) {
  return format_number(v.value_or(std::numeric_limits<double>::quiet_NaN()));
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json scaled(const std::optional<double>& v) { return v ? json(*v * 100.0) : json(nullptr); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io_error", "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail("io_error", "failed writing " + path.string());
}

std::optional<double> parse_opt(const std::string& cell) {
  if (cell == "nan") return std::nullopt;
  return std::stod(cell);
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.t);
  for (const std::string& cell :
       {format_number(r.em), opt(r.bwt), opt(r.fwt), opt(r.kar), format_number(r.kg_alignment),
        format_number(r.kg_forgetting), format_number(r.kg_updating), std::to_string(r.tokens_trained),
        format_number(r.train_time_s), std::to_string(r.discarded_items)}) {
    row += ',';
    row += cell;
  }
  return row;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : records) out << metrics_csv_row(r) << '\n';
}

json summarize(const RunResult& result) {
  if (result.records.empty()) fail("invalid_argument", "run has no records");
  const MetricsRecord& last = result.records.back();
  std::int64_t tokens_arrived = 0;
  std::size_t items_trained = 0;
  std::size_t items_replayed = 0;
  std::size_t items_selected_out = 0;
  for (const auto& r : result.records) {
    tokens_arrived += r.tokens_arrived;
    items_trained += r.items_trained;
    items_replayed += r.items_replayed;
    items_selected_out += r.items_selected_out;
  }
  json s;
  s["steps"] = result.records.size();
  s["final"] = {{"em", result.final_em},
                {"last_step_em", last.em},
                {"bwt", opt_json(last.bwt)},
                {"fwt", opt_json(last.fwt)},
                {"kar", opt_json(last.kar)},
                {"kg_alignment", last.kg_alignment},
                {"kg_forgetting", last.kg_forgetting},
                {"kg_updating", last.kg_updating}};
  s["display"] = {{"em", result.final_em * 100.0},
                  {"last_step_em", last.em * 100.0},
                  {"bwt", scaled(last.bwt)},
                  {"fwt", scaled(last.fwt)},
                  {"kar", opt_json(last.kar)}};
  s["totals"] = {{"tokens_trained", result.totals.tokens_trained},
                 {"tokens_arrived", tokens_arrived},
                 {"tokens_discarded", result.totals.tokens_discarded},
                 {"items_discarded", result.totals.items_discarded},
                 {"items_selected_out", items_selected_out},
                 {"items_trained", items_trained},
                 {"items_replayed", items_replayed},
                 {"train_time_s", result.totals.train_time_s}};
  return s;
}

void write_run(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "plotdata", ec);
  if (ec) fail("io_error", "cannot create " + (dir / "plotdata").string() + ": " + ec.message());

  {
    const auto path = dir / "metrics.csv";
    auto out = open_out(path);
    write_metrics_csv(result.records, out);
    finish(out, path);
  }
  {
    const auto path = dir / "summary.json";
    auto out = open_out(path);
    out << summarize(result).dump(2) << '\n';
    finish(out, path);
  }
  {
    const auto path = dir / "manifest.json";
    auto out = open_out(path);
    out << result.manifest.dump(2) << '\n';
    finish(out, path);
  }

  using Getter = std::string (*)(const MetricsRecord&);
  const std::pair<const char*, Getter> series[] = {
      {"em", [](const MetricsRecord& r) { return format_number(r.em); }},
      {"bwt", [](const MetricsRecord& r) { return opt(r.bwt); }},
      {"fwt", [](const MetricsRecord& r) { return opt(r.fwt); }},
      {"kar", [](const MetricsRecord& r) { return opt(r.kar); }},
      {"kg_alignment", [](const MetricsRecord& r) { return format_number(r.kg_alignment); }},
      {"kg_forgetting", [](const MetricsRecord& r) { return format_number(r.kg_forgetting); }},
      {"kg_updating", [](const MetricsRecord& r) { return format_number(r.kg_updating); }},
      {"tokens_trained", [](const MetricsRecord& r) { return std::to_string(r.tokens_trained); }},
      {"train_time_s", [](const MetricsRecord& r) { return format_number(r.train_time_s); }},
      {"discarded_items", [](const MetricsRecord& r) { return std::to_string(r.discarded_items); }},
  };
  for (const auto& [name, get] : series) {
    const auto path = dir / "plotdata" / (std::string(name) + ".csv");
    auto out = open_out(path);
    out << "t," << name << '\n';
    for (const auto& r : result.records) out << r.t << ',' << get(r) << '\n';
    finish(out, path);
  }
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    fail("parse_error", path.string() + ": unexpected header");
  }
  std::vector<MetricsRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) fail("parse_error", path.string() + ":" + std::to_string(lineno) + ": expected 11 columns");
    try {
      MetricsRecord r;
      r.t = std::stoi(cells[0]);
      r.em = std::stod(cells[1]);
      r.bwt = parse_opt(cells[2]);
      r.fwt = parse_opt(cells[3]);
      r.kar = parse_opt(cells[4]);
      r.kg_alignment = std::stod(cells[5]);
      r.kg_forgetting = std::stod(cells[6]);
      r.kg_updating = std::stod(cells[7]);
      r.tokens_trained = std::stoll(cells[8]);
      r.train_time_s = std::stod(cells[9]);
      r.discarded_items = std::stoull(cells[10]);
      records.push_back(r);
    } catch (const std::logic_error&) {
      fail("parse_error", path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return records;
}

json report_run(const std::filesystem::path& dir) {
  const auto records = read_metrics_csv(dir / "metrics.csv");
  if (records.empty()) fail("parse_error", "metrics.csv has no rows");
  const MetricsRecord& last = records.back();
  std::size_t discarded = 0;
  for (const auto& r : records) discarded += r.discarded_items;

  json out;
  out["run"] = dir.filename().string();
  out["steps"] = records.size();
  out["final"] = {{"last_step_em", last.em},
                  {"bwt", opt_json(last.bwt)},
                  {"fwt", opt_json(last.fwt)},
                  {"kar", opt_json(last.kar)},
                  {"kg_alignment", last.kg_alignment},
                  {"kg_forgetting", last.kg_forgetting},
                  {"kg_updating", last.kg_updating}};
  out["totals"] = {{"tokens_trained", last.tokens_trained},
                   {"train_time_s", last.train_time_s},
                   {"items_discarded", discarded}};
  out["series"] = json::object();
  for (const auto& r : records) {
    out["series"]["em"].push_back(r.em);
    out["series"]["bwt"].push_back(opt_json(r.bwt));
    out["series"]["fwt"].push_back(opt_json(r.fwt));
  }

  const auto summary_path = dir / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    std::ifstream in(summary_path);
    json summary;
    try {
      summary = json::parse(in);
    } catch (const json::exception& e) {
      fail("parse_error", summary_path.string() + ": " + e.what());
    }
    out["final"]["em"] = summary["final"]["em"];
    const bool consistent = summary["steps"] == records.size() &&
                            summary["totals"]["tokens_trained"] == last.tokens_trained &&
                            summary["totals"]["items_discarded"] == discarded;
    out["consistent_with_summary"] = consistent;
  }
  return out;
}

std::vector<SweepCell> ratio_sweep(const RunConfig& base) {
  const Stream stream = load_stream(base);
  const TemplateSet& templates = parsing_templates();
  std::vector<SweepCell> cells;
  for (double r : kSweepRatios) {
    SweepCell cell;
    cell.ratio = r;
    RunConfig c = base;
    c.coreset.method = CoresetMethod::KCenter;
    c.coreset.ratio = r;
    try {
      auto learner = make_learner(c, stream, templates);
      cell.result = run_experiment(c, stream, *learner, templates);
    } catch (const Error& e) {
      cell.error = e.code() + ": " + e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_sweep_table(const std::vector<SweepCell>& cells, std::ostream& out) {
  out << "ratio,em,last_step_em,bwt,fwt,kar,tokens_trained,error\n";
  for (const auto& c : cells) {
    out << format_number(c.ratio) << ',';
    if (c.result) {
      const auto& last = c.result->records.back();
      out << format_number(c.result->final_em) << ',' << format_number(last.em) << ',' << opt(last.bwt)
          << ',' << opt(last.fwt) << ',' << opt(last.kar) << ',' << c.result->totals.tokens_trained
          << ",\n";
    } else {
      std::string err = c.error;
      for (char& ch : err) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      out << "nan,nan,nan,nan,nan,0," << err << '\n';
    }
  }
}

}  // namespace ockl
