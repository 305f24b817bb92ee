#include "ockl/stream_io.hpp"

#include <fstream>
#include <set>
#include <string>

#include "ockl/error.hpp"

namespace ockl {

using nlohmann::json;

namespace {

json source_json(const SourceRef& s) { return json{{"fact_id", s.fact_id}, {"version", s.version}}; }

SourceRef source_from(const json& j) {
  return SourceRef{j.at("fact_id").get<std::string>(), j.at("version").get<int>()};
}

template <typename Fn>
void for_each_record(std::istream& in, const char* what, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      fail("parse_error", std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

StreamStep& step_at(Stream& stream, int index) {
  if (index < 1) fail("parse_error", "step index must be >= 1");
  while (static_cast<int>(stream.steps.size()) < index) {
    StreamStep s;
    s.index = static_cast<int>(stream.steps.size()) + 1;
    stream.steps.push_back(std::move(s));
  }
  return stream.steps[static_cast<std::size_t>(index - 1)];
}

}  // namespace

json to_json(const KnowledgeItem& item, int step) {
  return json{{"item_id", item.item_id}, {"text", item.text},  {"date", item.date},
              {"source", source_json(item.source)}, {"step", step}};
}

json to_json(const QAItem& item, int step) {
  return json{{"qa_id", item.qa_id}, {"query", item.query}, {"gold", item.gold},
              {"date", item.date},   {"source", source_json(item.source)}, {"step", step}};
}

KnowledgeItem knowledge_item_from_json(const json& j) {
  KnowledgeItem item;
  item.item_id = j.at("item_id").get<std::string>();
  item.text = j.at("text").get<std::string>();
  item.date = j.at("date").get<Day>();
  item.source = source_from(j.at("source"));
  item.token_count = static_cast<int>(tokenize(item.text).size());
  return item;
}

QAItem qa_item_from_json(const json& j) {
  QAItem qa;
  qa.qa_id = j.at("qa_id").get<std::string>();
  qa.query = j.at("query").get<std::string>();
  qa.gold = j.at("gold").get<std::string>();
  qa.date = j.at("date").get<Day>();
  qa.source = source_from(j.at("source"));
  if (qa.gold.empty()) fail("parse_error", "QA item " + qa.qa_id + " has an empty gold answer");
  return qa;
}

void write_knowledge_jsonl(const Stream& stream, std::ostream& out) {
  for (const auto& step : stream.steps) {
    for (const auto& item : step.knowledge) out << to_json(item, step.index).dump() << '\n';
  }
}

void write_qa_jsonl(const Stream& stream, std::ostream& out) {
  for (const auto& step : stream.steps) {
    for (const auto& qa : step.qa) out << to_json(qa, step.index).dump() << '\n';
  }
}

Stream read_stream(std::istream& knowledge, std::istream& qa) {
  Stream stream;
  std::set<SourceRef> seen;
  bool repeated = false;
  for_each_record(knowledge, "knowledge", [&](const json& j) {
    KnowledgeItem item = knowledge_item_from_json(j);
    if (!seen.insert(item.source).second) repeated = true;
    step_at(stream, j.at("step").get<int>()).knowledge.push_back(std::move(item));
  });
  for_each_record(qa, "qa", [&](const json& j) {
    QAItem item = qa_item_from_json(j);
    step_at(stream, j.at("step").get<int>()).qa.push_back(std::move(item));
  });
  stream.mode = repeated ? StreamMode::Redundant : StreamMode::RedundancyFree;
  for (auto& step : stream.steps) {
    // QA items only probe versions new in their step, so they bound the window.
    if (step.qa.empty()) continue;
    step.window_begin = step.qa.front().date;
    step.window_end = step.qa.front().date;
    for (const auto& item : step.qa) {
      step.window_begin = std::min(step.window_begin, item.date);
      step.window_end = std::max(step.window_end, item.date + 1);
    }
  }
  return stream;
}

Stream read_stream(const std::filesystem::path& knowledge, const std::filesystem::path& qa) {
  std::ifstream k(knowledge);
  if (!k) fail("io_error", "cannot open " + knowledge.string());
  std::ifstream q(qa);
  if (!q) fail("io_error", "cannot open " + qa.string());
  return read_stream(k, q);
}

json to_json(const StreamStats& stats) {
  auto cdf = [](const std::vector<CdfPoint>& points) {
    json arr = json::array();
    for (const auto& p : points) arr.push_back(json::array({p.delta, p.cumulative}));
    return arr;
  };
  return json{{"n_items", stats.n_items},
              {"avg_text_len", stats.avg_text_len},
              {"avg_token_len", stats.avg_token_len},
              {"variant_fraction_measured", stats.variant_fraction_measured},
              {"token_change_cdf", cdf(stats.token_change_cdf)},
              {"date_change_cdf", cdf(stats.date_change_cdf)}};
}

}  // namespace ockl
