// Protocol child wrapping the in-process fact memory. Misbehaves on request
// so the client's error handling can be exercised:
//   --fault version     answers the handshake with version 2
//   --fault hang        never answers op --fault-op (default: hello)
//   --fault wrong-id    answers op --fault-op with the wrong id
//   --fault garbage     answers op --fault-op with a non-JSON line
//   --fault exit        exits when op --fault-op arrives
//   --fault remote      answers op --fault-op with an error response
//   --no-embed          omits embed from the advertised ops

#include <unistd.h>

#include <stdexcept>
#include <iostream>
#include <string>

#include "json.hpp"
#include "ockl/datagen.hpp"
#include "ockl/extproto.hpp"
#include "ockl/learners.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  std::string fault;
  std::string fault_op = "hello";
  bool embed = true;
  ockl::FactMemoryConfig config;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fault" && i + 1 < argc) fault = argv[++i];
    else if (a == "--fault-op" && i + 1 < argc) fault_op = argv[++i];
    else if (a == "--no-embed") embed = false;
    else if (a == "--capacity" && i + 1 < argc) config.capacity = std::stoull(argv[++i]);
    else if (a == "--embed-dim" && i + 1 < argc) config.embed_dim = std::stoull(argv[++i]);
    else if (a == "--per-token-cost" && i + 1 < argc) config.cost.per_token_cost = std::stod(argv[++i]);
    else {
      std::cerr << "echo_learner: unknown argument " << a << '\n';
      return 2;
    }
  }
  ockl::FactMemoryLearner learner(ockl::TemplateSet::standard(ockl::kMaxRelations), config);

  std::string line;
  while (std::getline(std::cin, line)) {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::exception&) {
      std::cout << json{{"id", nullptr}, {"ok", false},
                        {"error", {{"code", "bad_request"}, {"message", "malformed line"}}}}
                       .dump()
                << std::endl;
      continue;
    }
    const auto id = req.value("id", json());
    const std::string op = req.value("op", "");
    json resp = {{"id", id}, {"ok", true}};

    if (op == fault_op) {
      if (fault == "hang") {
        ::pause();
      } else if (fault == "exit") {
        return 3;
      } else if (fault == "garbage") {
        std::cout << "this is not json" << std::endl;
        continue;
      } else if (fault == "wrong-id") {
        resp["id"] = id.get<std::uint64_t>() + 7;
      } else if (fault == "remote") {
        std::cout << json{{"id", id}, {"ok", false},
                          {"error", {{"code", "out_of_memory"}, {"message", "simulated failure"}}}}
                         .dump()
                  << std::endl;
        continue;
      }
    }

    try {
      if (op == "hello") {
        resp["version"] = fault == "version" ? 2 : ockl::kProtocolVersion;
        json ops = {"train", "answer", "predict_loss", "snapshot_id", "shutdown"};
        if (embed) ops.push_back("embed");
        resp["ops"] = ops;
      } else if (op == "train") {
        std::vector<ockl::KnowledgeItem> items;
        for (const auto& j : req.at("items")) {
          ockl::KnowledgeItem it;
          it.item_id = j.at("item_id").get<std::string>();
          it.text = j.at("text").get<std::string>();
          it.date = j.at("date").get<ockl::Day>();
          it.token_count = j.at("token_count").get<int>();
          items.push_back(std::move(it));
        }
        const auto report = learner.train(items);
        resp["tokens_processed"] = report.tokens_processed;
        resp["cost_seconds"] = report.cost_seconds;
        resp["items_skipped"] = report.items_skipped;
      } else if (op == "answer") {
        resp["answers"] = learner.answer(req.at("queries").get<std::vector<std::string>>());
      } else if (op == "embed" && embed) {
        const auto texts = req.at("texts").get<std::vector<std::string>>();
        if (req.value("dim", config.embed_dim) != config.embed_dim) {
          throw std::invalid_argument("embedding dimension mismatch");
        }
        json vectors = json::array();
        for (const auto& e : learner.embed(texts)) {
          vectors.push_back(std::vector<double>(e.values().begin(), e.values().end()));
        }
        resp["vectors"] = vectors;
      } else if (op == "predict_loss") {
        std::vector<ockl::KnowledgeItem> items;
        for (const auto& j : req.at("items")) {
          ockl::KnowledgeItem it;
          it.text = j.at("text").get<std::string>();
          it.date = j.at("date").get<ockl::Day>();
          items.push_back(std::move(it));
        }
        resp["losses"] = learner.predict_loss(items);
      } else if (op == "snapshot_id") {
        resp["snapshot_id"] = learner.snapshot_id();
      } else if (op == "shutdown") {
        std::cout << resp.dump() << std::endl;
        return 0;
      } else {
        resp = {{"id", id}, {"ok", false},
                {"error", {{"code", "unsupported_op"}, {"message", "unknown op " + op}}}};
      }
    } catch (const std::exception& e) {
      resp = {{"id", id}, {"ok", false}, {"error", {{"code", "bad_request"}, {"message", e.what()}}}};
    }
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}
