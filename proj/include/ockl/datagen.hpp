#pragma once

// Synthetic fact universe and the knowledge / QA streams built from it.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ockl/core.hpp"

namespace ockl {

// A relation's statement and question forms. Placeholders are "{s}" (subject)
// and "{o}" (object); questions contain "{s}" only.
struct RelationTemplate {
  std::string relation;
  std::string statement;
  std::string question;
  std::vector<std::string> values;  // object pool; empty = entity-valued
};

// Literal runs around placeholders: "{s} plays for {o}." compiles to
// literals {"", " plays for ", "."} and slots {'s', 'o'}.
struct CompiledPattern {
  std::vector<std::string> literals;
  std::vector<char> slots;
};

CompiledPattern compile_pattern(std::string_view text);

inline constexpr int kMaxRelations = 64;

class TemplateSet {
 public:
  TemplateSet() = default;
  explicit TemplateSet(std::vector<RelationTemplate> templates);

  // The shipped relation set, extended with generic attribute relations when
  // more than the hand-written ones are requested (up to kMaxRelations).
  // Prefixes of the full set agree, so standard(kMaxRelations) parses any
  // text rendered by a smaller standard set identically.
  static TemplateSet standard(int n_relations = 0);

  std::size_t size() const { return templates_.size(); }
  const RelationTemplate& operator[](std::size_t i) const { return templates_[i]; }
  const RelationTemplate* find(std::string_view relation) const;
  std::optional<std::size_t> index_of(std::string_view relation) const;

  const std::vector<RelationTemplate>& all() const { return templates_; }
  const CompiledPattern& statement_pattern(std::size_t i) const { return statements_[i]; }
  const CompiledPattern& question_pattern(std::size_t i) const { return questions_[i]; }

 private:
  std::vector<RelationTemplate> templates_;
  std::vector<CompiledPattern> statements_;
  std::vector<CompiledPattern> questions_;
};

// Statement/question texts may carry a leading "As of day N, " qualifier.
inline constexpr std::string_view kDatePrefixHead = "As of day ";

std::string date_prefix(Day day);

struct ParsedStatement {
  std::size_t template_index = 0;
  std::string subject;
  std::string relation;
  std::string object;
  std::optional<Day> date;
};

struct ParsedQuestion {
  std::size_t template_index = 0;
  std::string subject;
  std::string relation;
  std::optional<Day> date;
  std::string undated;  // the question with the date qualifier removed
};

// Splits an optional "As of day N, " qualifier off the front of `text`.
std::pair<std::optional<Day>, std::string_view> split_date_prefix(std::string_view text);

std::string render_statement(const RelationTemplate& tmpl, std::string_view subject,
                             std::string_view object);
std::string render_question(const RelationTemplate& tmpl, std::string_view subject);

// Inverse of render_statement; the lowest matching template index wins.
std::optional<ParsedStatement> parse_statement(std::string_view text, const TemplateSet& templates);
std::optional<ParsedQuestion> parse_question(std::string_view text, const TemplateSet& templates);

struct UniverseConfig {
  std::uint64_t seed = 1;
  int n_entities = 50;
  int n_relations = 8;
  double variant_fraction = 0.624;
  Day horizon = 400;
  int updates_per_variant = 1;
};

// Every fact chain is one (subject, relation); versions are ordered by
// valid_from and version numbers count up from 0.
struct FactUniverse {
  UniverseConfig config;
  TemplateSet templates;
  std::vector<std::vector<Fact>> chains;

  std::size_t version_count() const;
  std::size_t variant_chain_count() const;
};

FactUniverse generate_universe(const UniverseConfig& config);

KnowledgeItem render_knowledge_item(const Fact& fact, const TemplateSet& templates);
QAItem render_qa_item(const Fact& fact, const TemplateSet& templates);

// Inverse of render_knowledge_item: (subject, relation, object).
std::optional<ParsedStatement> parse_knowledge_item(std::string_view text,
                                                    const TemplateSet& templates);

enum class StreamMode { Redundant, RedundancyFree };

std::string to_string(StreamMode mode);
StreamMode stream_mode_from_string(std::string_view name);

struct StreamStep {
  int index = 0;  // 1-based task index
  Day window_begin = 0;
  Day window_end = 0;  // exclusive
  std::vector<KnowledgeItem> knowledge;
  std::vector<QAItem> qa;
};

struct Stream {
  StreamMode mode = StreamMode::RedundancyFree;
  std::vector<StreamStep> steps;

  std::size_t knowledge_count() const;
  std::size_t qa_count() const;
};

struct StreamConfig {
  int n_steps = 20;
  int items_per_step = 32;
  StreamMode mode = StreamMode::RedundancyFree;
  std::uint64_t seed = 1;
};

Stream build_streams(const FactUniverse& universe, const StreamConfig& config);

struct CdfPoint {
  double delta = 0.0;
  double cumulative = 0.0;
};

struct StreamStats {
  std::size_t n_items = 0;
  double avg_text_len = 0.0;
  double avg_token_len = 0.0;
  double variant_fraction_measured = 0.0;
  std::vector<CdfPoint> token_change_cdf;
  std::vector<CdfPoint> date_change_cdf;
};

StreamStats compute_stream_stats(const Stream& stream, const TemplateSet& templates);

// Desk-scale defaults used by the acceptance experiments and `gen`.
struct GenerationConfig {
  UniverseConfig universe;
  StreamConfig stream;
};

GenerationConfig default_generation_config();

}  // namespace ockl
