#include "ockl/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "ockl/error.hpp"
#include "ockl/rng.hpp"

namespace ockl {

namespace {

std::vector<RelationTemplate> shipped_templates() {
  return {
      {"position_held", "{s} holds the position of {o}.", "What position does {s} hold?",
       {"president", "mayor", "head coach", "chief executive officer", "minister of finance",
        "ambassador", "chair of the board", "senator", "governor", "secretary of state",
        "team captain", "general manager"}},
      {"member_of_sports_team", "{s} plays for {o}.", "Which team does {s} play for?",
       {"Riverside United", "FC Northbridge", "Lakeside Rovers", "Harbor City Athletic",
        "Old Mill Wanderers", "Eastgate", "Summit Falcons", "Westbrook Town",
        "Ironvale Sporting Club", "Redcliff"}},
      {"employer", "{s} works for {o}.", "Who is the employer of {s}?",
       {"Acme Corporation", "Globex", "Initech", "Umbrella Holdings", "Vandelay Industries",
        "Stark Manufacturing Group", "Wayne Enterprises", "Hooli", "Soylent", "Cyberdyne Systems"}},
      {"residence", "{s} lives in {o}.", "Where does {s} live?",
       {"Paris", "Berlin", "New York City", "Rio de Janeiro", "Tokyo", "Cape Town", "Oslo",
        "Buenos Aires", "Lisbon", "San Francisco", "Kuala Lumpur"}},
      {"spouse", "{s} is married to {o}.", "Who is {s} married to?", {}},
      {"country_of_citizenship", "{s} is a citizen of {o}.", "Which country is {s} a citizen of?",
       {"France", "Germany", "Japan", "Brazil", "Canada", "New Zealand", "South Africa", "Norway",
        "Argentina", "United Kingdom", "Portugal"}},
      {"educated_at", "{s} was educated at {o}.", "Where was {s} educated?",
       {"Northfield University", "the Institute of Technology", "Kingsbridge College",
        "Eastern State University", "the Royal Academy of Music", "Lakeshore Polytechnic",
        "Harwood School of Law", "Meridian University"}},
      {"award_received", "{s} received the award {o}.", "Which award did {s} receive?",
       {"Golden Quill", "Medal of Merit", "Order of the Silver Star", "Lifetime Achievement Award",
        "Prize for Innovation", "Laurel Cup", "Distinguished Service Cross", "Honorary Fellowship"}},
  };
}

RelationTemplate attribute_template(int k) {
  const std::string name = "attribute_r" + std::to_string(k);
  RelationTemplate t{name, "{s} has attribute r" + std::to_string(k) + " set to {o}.",
                     "What is attribute r" + std::to_string(k) + " of {s}?", {}};
  for (int v = 0; v < 12; ++v) t.values.push_back("v" + std::to_string(k) + "-" + std::to_string(v));
  return t;
}

std::string entity_label(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "E%04d", i + 1);
  return buf;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace

CompiledPattern compile_pattern(std::string_view text) {
  CompiledPattern p;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{' && i + 2 < text.size() && text[i + 2] == '}' &&
        (text[i + 1] == 's' || text[i + 1] == 'o')) {
      p.literals.push_back(current);
      p.slots.push_back(text[i + 1]);
      current.clear();
      i += 2;
    } else {
      current.push_back(text[i]);
    }
  }
  p.literals.push_back(current);
  return p;
}

namespace {

// Leftmost-shortest capture for every slot but the last, which takes the span
// up to the trailing literal. Captures must be non-empty.
std::optional<std::map<char, std::string>> match(const CompiledPattern& p, std::string_view text) {
  const std::string& head = p.literals.front();
  const std::string& tail = p.literals.back();
  if (text.size() < head.size() + tail.size()) return std::nullopt;
  if (text.substr(0, head.size()) != head) return std::nullopt;
  if (text.substr(text.size() - tail.size()) != tail) return std::nullopt;
  std::string_view body = text.substr(head.size(), text.size() - head.size() - tail.size());
  std::map<char, std::string> captures;
  for (std::size_t s = 0; s < p.slots.size(); ++s) {
    std::string_view value;
    if (s + 1 == p.slots.size()) {
      value = body;
    } else {
      const std::string& sep = p.literals[s + 1];
      const std::size_t pos = body.find(sep, 1);
      if (pos == std::string_view::npos) return std::nullopt;
      value = body.substr(0, pos);
      body = body.substr(pos + sep.size());
    }
    if (value.empty()) return std::nullopt;
    captures[p.slots[s]] = std::string(value);
  }
  return captures;
}

void require(bool ok, const std::string& message) {
  if (!ok) fail("invalid_argument", message);
}

}  // namespace

TemplateSet::TemplateSet(std::vector<RelationTemplate> templates) : templates_(std::move(templates)) {
  for (const auto& t : templates_) {
    statements_.push_back(compile_pattern(t.statement));
    questions_.push_back(compile_pattern(t.question));
  }
}

TemplateSet TemplateSet::standard(int n_relations) {
  if (n_relations > kMaxRelations) {
    fail("invalid_argument", "at most " + std::to_string(kMaxRelations) + " relations are supported");
  }
  auto templates = shipped_templates();
  const int shipped = static_cast<int>(templates.size());
  for (int k = shipped; k < n_relations; ++k) templates.push_back(attribute_template(k));
  return TemplateSet(std::move(templates));
}

const RelationTemplate* TemplateSet::find(std::string_view relation) const {
  for (const auto& t : templates_) {
    if (t.relation == relation) return &t;
  }
  return nullptr;
}

std::optional<std::size_t> TemplateSet::index_of(std::string_view relation) const {
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (templates_[i].relation == relation) return i;
  }
  return std::nullopt;
}

std::string date_prefix(Day day) { return std::string(kDatePrefixHead) + std::to_string(day) + ", "; }

std::pair<std::optional<Day>, std::string_view> split_date_prefix(std::string_view text) {
  if (text.substr(0, kDatePrefixHead.size()) != kDatePrefixHead) return {std::nullopt, text};
  std::string_view rest = text.substr(kDatePrefixHead.size());
  Day day = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), day);
  if (ec != std::errc() || ptr == rest.data()) return {std::nullopt, text};
  std::string_view after(ptr, static_cast<std::size_t>(rest.data() + rest.size() - ptr));
  if (after.substr(0, 2) != ", ") return {std::nullopt, text};
  return {day, after.substr(2)};
}

std::string render_statement(const RelationTemplate& tmpl, std::string_view subject,
                             std::string_view object) {
  // Substitute the object first so a subject containing "{o}" is not expanded.
  std::string text = replace_all(tmpl.statement, "{o}", "\x01");
  text = replace_all(std::move(text), "{s}", subject);
  return replace_all(std::move(text), "\x01", object);
}

std::string render_question(const RelationTemplate& tmpl, std::string_view subject) {
  return replace_all(tmpl.question, "{s}", subject);
}

std::optional<ParsedStatement> parse_statement(std::string_view text, const TemplateSet& templates) {
  auto [date, body] = split_date_prefix(text);
  for (std::size_t i = 0; i < templates.size(); ++i) {
    auto captures = match(templates.statement_pattern(i), body);
    if (!captures || !captures->count('s') || !captures->count('o')) continue;
    return ParsedStatement{i, (*captures)['s'], templates[i].relation, (*captures)['o'], date};
  }
  return std::nullopt;
}

std::optional<ParsedQuestion> parse_question(std::string_view text, const TemplateSet& templates) {
  auto [date, body] = split_date_prefix(text);
  for (std::size_t i = 0; i < templates.size(); ++i) {
    auto captures = match(templates.question_pattern(i), body);
    if (!captures || !captures->count('s')) continue;
    return ParsedQuestion{i, (*captures)['s'], templates[i].relation, date, std::string(body)};
  }
  return std::nullopt;
}

std::size_t FactUniverse::version_count() const {
  std::size_t n = 0;
  for (const auto& chain : chains) n += chain.size();
  return n;
}

std::size_t FactUniverse::variant_chain_count() const {
  std::size_t n = 0;
  for (const auto& chain : chains) {
    if (!chain.empty() && chain.front().time_variant) ++n;
  }
  return n;
}

FactUniverse generate_universe(const UniverseConfig& config) {
  require(config.n_entities >= 1, "n_entities must be >= 1");
  require(config.n_relations >= 1, "n_relations must be >= 1");
  require(config.n_relations <= kMaxRelations, "n_relations must be <= " + std::to_string(kMaxRelations));
  require(config.updates_per_variant >= 1, "updates_per_variant must be >= 1");
  require(config.variant_fraction >= 0.0 && config.variant_fraction <= 1.0,
          "variant_fraction must lie in [0,1]");
  require(config.horizon >= 1, "horizon must be >= 1");
  if (config.variant_fraction > 0.0) {
    require(config.horizon >= 2, "horizon must be >= 2 when variant_fraction > 0");
    require(config.horizon >= config.updates_per_variant + 1,
            "horizon too short for updates_per_variant distinct update dates");
  }

  FactUniverse u;
  u.config = config;
  u.templates = TemplateSet::standard(config.n_relations);

  const std::size_t n_chains =
      static_cast<std::size_t>(config.n_entities) * static_cast<std::size_t>(config.n_relations);
  const auto n_variant =
      static_cast<std::size_t>(std::llround(config.variant_fraction * static_cast<double>(n_chains)));

  Rng pick(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(n_chains);
  for (std::size_t i = 0; i < n_chains; ++i) order[i] = i;
  pick.shuffle(order);
  std::vector<bool> variant(n_chains, false);
  for (std::size_t i = 0; i < n_variant; ++i) variant[order[i]] = true;

  Rng rng(derive_seed(config.seed, 2));
  u.chains.reserve(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    const int entity = static_cast<int>(c / static_cast<std::size_t>(config.n_relations));
    const int relation = static_cast<int>(c % static_cast<std::size_t>(config.n_relations));
    const RelationTemplate& tmpl = u.templates[static_cast<std::size_t>(relation)];
    const std::string subject = entity_label(entity);

    // Updates always change the object unless the pool has a single choice.
    const std::size_t choices = tmpl.values.empty()
                                    ? static_cast<std::size_t>(std::max(config.n_entities - 1, 1))
                                    : tmpl.values.size();
    auto draw_object = [&](const std::string& previous) {
      for (;;) {
        std::string candidate;
        if (tmpl.values.empty()) {
          if (config.n_entities < 2) return entity_label(0);
          const int other = static_cast<int>(rng.index(static_cast<std::size_t>(config.n_entities)));
          if (other == entity) continue;
          candidate = entity_label(other);
        } else {
          candidate = tmpl.values[rng.index(tmpl.values.size())];
        }
        if (candidate != previous || choices <= 1) return candidate;
      }
    };

    std::vector<Day> dates;
    if (variant[c]) {
      for (std::size_t d : rng.sample(static_cast<std::size_t>(config.horizon),
                                      static_cast<std::size_t>(config.updates_per_variant) + 1)) {
        dates.push_back(static_cast<Day>(d));
      }
      std::sort(dates.begin(), dates.end());
    } else {
      dates.push_back(static_cast<Day>(rng.index(static_cast<std::size_t>(config.horizon))));
    }

    char id[24];
    std::snprintf(id, sizeof id, "F%06zu", c);
    std::vector<Fact> chain;
    std::string previous;
    for (std::size_t v = 0; v < dates.size(); ++v) {
      std::string object = draw_object(previous);
      chain.push_back(Fact{id, subject, tmpl.relation, object, dates[v], static_cast<int>(v),
                           static_cast<bool>(variant[c])});
      previous = std::move(object);
    }
    u.chains.push_back(std::move(chain));
  }
  return u;
}

KnowledgeItem render_knowledge_item(const Fact& fact, const TemplateSet& templates) {
  const RelationTemplate* tmpl = templates.find(fact.relation);
  if (!tmpl) fail("missing_template", "no template for relation '" + fact.relation + "'");
  KnowledgeItem item;
  item.item_id = fact.fact_id + "v" + std::to_string(fact.version);
  item.text = render_statement(*tmpl, fact.subject, fact.object);
  item.date = fact.valid_from;
  item.token_count = static_cast<int>(tokenize(item.text).size());
  item.source = {fact.fact_id, fact.version};
  return item;
}

QAItem render_qa_item(const Fact& fact, const TemplateSet& templates) {
  const RelationTemplate* tmpl = templates.find(fact.relation);
  if (!tmpl) fail("missing_template", "no template for relation '" + fact.relation + "'");
  QAItem qa;
  qa.qa_id = "Q" + fact.fact_id.substr(1) + "v" + std::to_string(fact.version);
  qa.query = date_prefix(fact.valid_from) + render_question(*tmpl, fact.subject);
  qa.gold = fact.object;
  qa.date = fact.valid_from;
  qa.source = {fact.fact_id, fact.version};
  return qa;
}

std::optional<ParsedStatement> parse_knowledge_item(std::string_view text,
                                                    const TemplateSet& templates) {
  return parse_statement(text, templates);
}

std::string to_string(StreamMode mode) {
  return mode == StreamMode::Redundant ? "redundant" : "redundancy-free";
}

StreamMode stream_mode_from_string(std::string_view name) {
  if (name == "redundant") return StreamMode::Redundant;
  if (name == "redundancy-free") return StreamMode::RedundancyFree;
  fail("invalid_argument", "unknown stream mode '" + std::string(name) + "'");
}

std::size_t Stream::knowledge_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.knowledge.size();
  return n;
}

std::size_t Stream::qa_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.qa.size();
  return n;
}

Stream build_streams(const FactUniverse& universe, const StreamConfig& config) {
  require(config.n_steps >= 2, "n_steps must be >= 2");
  require(config.items_per_step >= 1, "items_per_step must be >= 1");
  if (universe.version_count() == 0) fail("invalid_argument", "universe has no facts");

  const Day horizon = std::max<Day>(universe.config.horizon, 1);
  const auto n_steps = static_cast<Day>(config.n_steps);

  // Window w covers days [ceil(w*H/n), ceil((w+1)*H/n)); day d falls in floor(d*n/H).
  auto window_of = [&](Day d) {
    Day clamped = std::clamp<Day>(d, 0, horizon - 1);
    return static_cast<std::size_t>(clamped * n_steps / horizon);
  };
  auto window_start = [&](Day w) { return (w * horizon + n_steps - 1) / n_steps; };

  std::vector<std::vector<const Fact*>> buckets(static_cast<std::size_t>(config.n_steps));
  for (const auto& chain : universe.chains) {
    for (const auto& fact : chain) buckets[window_of(fact.valid_from)].push_back(&fact);
  }
  for (auto& bucket : buckets) {
    std::stable_sort(bucket.begin(), bucket.end(), [](const Fact* a, const Fact* b) {
      if (a->valid_from != b->valid_from) return a->valid_from < b->valid_from;
      if (a->fact_id != b->fact_id) return a->fact_id < b->fact_id;
      return a->version < b->version;
    });
  }

  Stream stream;
  stream.mode = config.mode;
  Rng rng(derive_seed(config.seed, 3));
  std::vector<const Fact*> emitted;
  for (Day w = 0; w < n_steps; ++w) {
    StreamStep step;
    step.index = static_cast<int>(w) + 1;
    step.window_begin = window_start(w);
    step.window_end = window_start(w + 1);
    const auto& fresh = buckets[static_cast<std::size_t>(w)];
    for (const Fact* f : fresh) {
      step.knowledge.push_back(render_knowledge_item(*f, universe.templates));
      step.qa.push_back(render_qa_item(*f, universe.templates));
    }
    if (config.mode == StreamMode::Redundant && !emitted.empty()) {
      const auto target = static_cast<std::size_t>(config.items_per_step);
      std::size_t repeat = 0;
      while (step.knowledge.size() < target) {
        const Fact* f = emitted[rng.index(emitted.size())];
        KnowledgeItem item = render_knowledge_item(*f, universe.templates);
        item.item_id += "r" + std::to_string(step.index) + "-" + std::to_string(repeat++);
        step.knowledge.push_back(std::move(item));
      }
    }
    emitted.insert(emitted.end(), fresh.begin(), fresh.end());
    stream.steps.push_back(std::move(step));
  }
  return stream;
}

StreamStats compute_stream_stats(const Stream& stream, const TemplateSet& templates) {
  StreamStats stats;
  // Distinct versions per chain: version -> (item text, date).
  std::map<std::string, std::map<int, std::pair<std::string, Day>>> chains;
  double text_chars = 0.0;
  double tokens = 0.0;
  for (const auto& step : stream.steps) {
    for (const auto& item : step.knowledge) {
      ++stats.n_items;
      text_chars += static_cast<double>(item.text.size());
      tokens += static_cast<double>(item.token_count);
      chains[item.source.fact_id].emplace(item.source.version, std::make_pair(item.text, item.date));
    }
  }
  if (stats.n_items == 0) return stats;
  stats.avg_text_len = text_chars / static_cast<double>(stats.n_items);
  stats.avg_token_len = tokens / static_cast<double>(stats.n_items);

  std::size_t variant = 0;
  std::vector<double> token_changes;
  std::vector<double> date_changes;
  for (const auto& [id, versions] : chains) {
    if (versions.size() > 1) ++variant;
    const std::pair<std::string, Day>* previous = nullptr;
    for (const auto& [version, entry] : versions) {
      if (previous) {
        const auto a = parse_statement(previous->first, templates);
        const auto b = parse_statement(entry.first, templates);
        const auto ta = tokenize(previous->first);
        const auto tb = tokenize(entry.first);
        double delta = std::abs(static_cast<double>(ta.size()) - static_cast<double>(tb.size()));
        if (a && b) {
          const auto oa = tokenize(a->object);
          const auto ob = tokenize(b->object);
          for (std::size_t i = 0; i < std::min(oa.size(), ob.size()); ++i) {
            if (oa[i] != ob[i]) delta += 1.0;
          }
        }
        token_changes.push_back(delta);
        date_changes.push_back(static_cast<double>(entry.second - previous->second));
      }
      previous = &entry;
    }
  }
  stats.variant_fraction_measured = static_cast<double>(variant) / static_cast<double>(chains.size());

  auto cdf = [](std::vector<double> values) {
    std::vector<CdfPoint> out;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
      out.push_back({values[i], static_cast<double>(i + 1) / n});
    }
    return out;
  };
  stats.token_change_cdf = cdf(std::move(token_changes));
  stats.date_change_cdf = cdf(std::move(date_changes));
  return stats;
}

GenerationConfig default_generation_config() {
  GenerationConfig g;
  g.universe.seed = 7;
  g.universe.n_entities = 50;
  g.universe.n_relations = 8;
  g.universe.variant_fraction = 0.624;
  g.universe.horizon = 400;
  g.universe.updates_per_variant = 1;
  g.stream.n_steps = 20;
  g.stream.items_per_step = 32;
  g.stream.mode = StreamMode::RedundancyFree;
  g.stream.seed = 7;
  return g;
}

}  // namespace ockl
