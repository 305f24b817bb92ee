#pragma once

// JSON Lines encoding of the knowledge and QA streams. One record per line;
// each record carries the 1-based task index in "step".

#include <filesystem>
#include <iosfwd>

#include "json.hpp"
#include "ockl/datagen.hpp"

namespace ockl {

nlohmann::json to_json(const KnowledgeItem& item, int step);
nlohmann::json to_json(const QAItem& item, int step);
KnowledgeItem knowledge_item_from_json(const nlohmann::json& j);
QAItem qa_item_from_json(const nlohmann::json& j);

void write_knowledge_jsonl(const Stream& stream, std::ostream& out);
void write_qa_jsonl(const Stream& stream, std::ostream& out);

// Rebuilds the step structure from the two files. Steps with no records in
// either file are kept (empty) up to the largest step index seen.
Stream read_stream(std::istream& knowledge, std::istream& qa);
Stream read_stream(const std::filesystem::path& knowledge, const std::filesystem::path& qa);

nlohmann::json to_json(const StreamStats& stats);

}  // namespace ockl
