#include "ockl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "ockl/error.hpp"

namespace ockl {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& key, const std::string& message) {
  throw Error("config_error", (key.empty() ? std::string("config") : key) + ": " + message);
}

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(path_, "expected an object");
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

  bool has(const std::string& name) {
    used_.insert(name);
    return j_.contains(name) && !j_.at(name).is_null();
  }

  const json& raw(const std::string& name) {
    used_.insert(name);
    return j_.at(name);
  }

  double number(const std::string& name, double fallback) {
    if (!has(name)) return fallback;
    const json& v = j_.at(name);
    if (!v.is_number()) config_fail(key(name), "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& name, std::int64_t fallback) {
    if (!has(name)) return fallback;
    const json& v = j_.at(name);
    if (!v.is_number_integer()) config_fail(key(name), "expected an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& name, std::uint64_t fallback) {
    if (!has(name)) return fallback;
    const json& v = j_.at(name);
    if (!v.is_number_unsigned()) config_fail(key(name), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& name, const std::string& fallback) {
    if (!has(name)) return fallback;
    const json& v = j_.at(name);
    if (!v.is_string()) config_fail(key(name), "expected a string");
    return v.get<std::string>();
  }

  template <typename Fn>
  auto parsed(const std::string& name, const std::string& fallback, Fn&& parse) {
    const std::string text = string(name, fallback);
    try {
      return parse(text);
    } catch (const Error& e) {
      config_fail(key(name), e.what());
    }
  }

  void finish() const {
    for (const auto& [name, value] : j_.items()) {
      if (!used_.count(name)) config_fail(key(name), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& key, const std::string& message) {
  if (!ok) config_fail(key, message);
}

}  // namespace

GenerationConfig generation_config_from_json(const json& j, const std::string& path) {
  GenerationConfig g = default_generation_config();
  Section s(j, path);
  g.universe.seed = s.unsigned_integer("seed", g.universe.seed);
  g.universe.n_entities = static_cast<int>(s.integer("entities", g.universe.n_entities));
  g.universe.n_relations = static_cast<int>(s.integer("relations", g.universe.n_relations));
  g.universe.variant_fraction = s.number("variant_fraction", g.universe.variant_fraction);
  g.universe.horizon = s.integer("horizon", g.universe.horizon);
  g.universe.updates_per_variant =
      static_cast<int>(s.integer("updates_per_variant", g.universe.updates_per_variant));
  g.stream.n_steps = static_cast<int>(s.integer("steps", g.stream.n_steps));
  g.stream.items_per_step = static_cast<int>(s.integer("items_per_step", g.stream.items_per_step));
  g.stream.mode = s.parsed("mode", to_string(g.stream.mode), stream_mode_from_string);
  g.stream.seed = s.unsigned_integer("stream_seed", g.universe.seed);
  s.finish();
  check(g.universe.n_entities >= 1, s.key("entities"), "must be >= 1");
  check(g.universe.n_relations >= 1, s.key("relations"), "must be >= 1");
  check(g.universe.variant_fraction >= 0.0 && g.universe.variant_fraction <= 1.0,
        s.key("variant_fraction"), "must lie in [0,1]");
  check(g.stream.n_steps >= 2, s.key("steps"), "must be >= 2");
  check(g.stream.items_per_step >= 1, s.key("items_per_step"), "must be >= 1");
  return g;
}

json to_json(const GenerationConfig& g) {
  return json{{"seed", g.universe.seed},
              {"entities", g.universe.n_entities},
              {"relations", g.universe.n_relations},
              {"variant_fraction", g.universe.variant_fraction},
              {"horizon", g.universe.horizon},
              {"updates_per_variant", g.universe.updates_per_variant},
              {"steps", g.stream.n_steps},
              {"items_per_step", g.stream.items_per_step},
              {"mode", to_string(g.stream.mode)},
              {"stream_seed", g.stream.seed}};
}

RunConfig run_config_from_json(const json& input, const std::filesystem::path& base_dir) {
  const json* root = &input;
  if (input.is_object() && input.contains("config") && input.contains("tool_version")) {
    root = &input.at("config");
  }
  RunConfig c;
  Section top(*root, "");

  if (!top.has("stream")) config_fail("stream", "missing");
  {
    Section s(top.raw("stream"), "stream");
    if (s.has("generate")) {
      c.stream.generate = generation_config_from_json(s.raw("generate"), "stream.generate");
    }
    const std::string k = s.string("knowledge", "");
    const std::string q = s.string("qa", "");
    s.finish();
    if (!c.stream.generate) {
      check(!k.empty(), "stream.knowledge", "missing (or give stream.generate)");
      check(!q.empty(), "stream.qa", "missing (or give stream.generate)");
      auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
      };
      c.stream.knowledge = resolve(k);
      c.stream.qa = resolve(q);
    }
  }

  if (top.has("learner")) {
    Section s(top.raw("learner"), "learner");
    const std::string kind = s.string("kind", "fact_memory");
    if (kind == "fact_memory") {
      c.learner.kind = LearnerKind::FactMemory;
    } else if (kind == "hashed_softmax") {
      c.learner.kind = LearnerKind::HashedSoftmax;
    } else if (kind == "external") {
      c.learner.kind = LearnerKind::External;
    } else {
      config_fail("learner.kind", "unknown learner '" + kind + "'");
    }
    if (s.has("capacity")) {
      const json& cap = s.raw("capacity");
      if (cap.is_string() && cap.get<std::string>() == "unlimited") {
        c.learner.capacity = std::numeric_limits<std::size_t>::max();
      } else if (cap.is_number_unsigned()) {
        c.learner.capacity = cap.get<std::size_t>();
      } else {
        config_fail("learner.capacity", "expected a non-negative integer or \"unlimited\"");
      }
    }
    const std::string eviction = s.string("eviction", "lru");
    if (eviction == "lru") {
      c.learner.eviction = Eviction::Lru;
    } else if (eviction == "random") {
      c.learner.eviction = Eviction::Random;
    } else {
      config_fail("learner.eviction", "expected \"lru\" or \"random\"");
    }
    c.learner.feature_dim = s.unsigned_integer("feature_dim", c.learner.feature_dim);
    c.learner.learning_rate = s.number("learning_rate", c.learner.learning_rate);
    c.learner.timeout_s = s.number("timeout_s", c.learner.timeout_s);
    if (s.has("command")) {
      const json& cmd = s.raw("command");
      if (!cmd.is_array()) config_fail("learner.command", "expected an array of strings");
      for (const auto& part : cmd) {
        if (!part.is_string()) config_fail("learner.command", "expected an array of strings");
        c.learner.command.push_back(part.get<std::string>());
      }
    }
    s.finish();
    check(c.learner.feature_dim >= 1, "learner.feature_dim", "must be >= 1");
    check(c.learner.learning_rate > 0.0, "learner.learning_rate", "must be > 0");
    check(c.learner.timeout_s > 0.0, "learner.timeout_s", "must be > 0");
    if (c.learner.kind == LearnerKind::External) {
      check(!c.learner.command.empty(), "learner.command", "required for external learners");
    }
  }

  if (top.has("strategy")) {
    Section s(top.raw("strategy"), "strategy");
    StrategyConfig& st = c.strategy;
    st.kind = s.parsed("kind", "vanilla", strategy_kind_from_string);
    st.buffer_capacity = s.unsigned_integer("buffer_capacity", st.buffer_capacity);
    st.mix_m0 = s.number("m0", st.mix_m0);
    st.mix_gamma = s.number("gamma", st.mix_gamma);
    st.reg_lambda0 = s.number("lambda0", st.reg_lambda0);
    st.reg_schedule = s.parsed("schedule", to_string(st.reg_schedule), reg_schedule_from_string);
    st.reg_decay = s.number("decay", st.reg_decay);
    st.rank = s.unsigned_integer("rank", st.rank);
    st.adapter_dim = s.unsigned_integer("adapter_dim", st.adapter_dim);
    st.distill_alpha = s.number("alpha", st.distill_alpha);
    st.teacher_refresh = static_cast<int>(s.integer("teacher_refresh", st.teacher_refresh));
    if (s.has("cost_multiplier")) st.cost_multiplier = s.number("cost_multiplier", 1.0);
    s.finish();
    try {
      st.validate();
    } catch (const Error& e) {
      config_fail("strategy", e.what());
    }
    if (c.learner.kind == LearnerKind::FactMemory) {
      check(st.kind == StrategyKind::Vanilla || st.kind == StrategyKind::Rehearsal, "strategy.kind",
            "fact_memory supports only vanilla and rehearsal");
    }
  }

  if (top.has("coreset")) {
    Section s(top.raw("coreset"), "coreset");
    c.coreset.method = s.parsed("method", "none", coreset_method_from_string);
    c.coreset.ratio = s.number("ratio", c.coreset.ratio);
    c.coreset.order = s.parsed("order", "ascending", loss_order_from_string);
    c.coreset.selection_cost_fraction =
        s.number("selection_cost_fraction", c.coreset.selection_cost_fraction);
    s.finish();
    check(c.coreset.ratio > 0.0 && c.coreset.ratio <= 1.0, "coreset.ratio", "must lie in (0,1]");
    check(c.coreset.selection_cost_fraction >= 0.0, "coreset.selection_cost_fraction",
          "must be >= 0");
  }

  if (top.has("budget")) {
    Section s(top.raw("budget"), "budget");
    const std::string mode = s.string("mode", "unlimited");
    if (mode == "unlimited") {
      c.budget.mode = BudgetMode::Unlimited;
    } else if (mode == "fixed") {
      c.budget.mode = BudgetMode::Fixed;
      if (!s.has("seconds")) config_fail("budget.seconds", "required for fixed budgets");
    } else if (mode == "reference") {
      c.budget.mode = BudgetMode::Reference;
    } else {
      config_fail("budget.mode", "expected \"unlimited\", \"fixed\" or \"reference\"");
    }
    c.budget.seconds = s.number("seconds", c.budget.seconds);
    c.budget.fraction = s.number("fraction", c.budget.fraction);
    c.budget.reference =
        s.parsed("reference_strategy", to_string(c.budget.reference), strategy_kind_from_string);
    s.finish();
    check(c.budget.seconds >= 0.0, "budget.seconds", "must be >= 0");
    check(c.budget.fraction > 0.0, "budget.fraction", "must be > 0");
  }

  if (top.has("cost")) {
    Section s(top.raw("cost"), "cost");
    c.cost.per_token_cost = s.number("per_token_cost", c.cost.per_token_cost);
    c.cost.per_item_overhead = s.number("per_item_overhead", c.cost.per_item_overhead);
    s.finish();
    check(c.cost.per_token_cost >= 0.0, "cost.per_token_cost", "must be >= 0");
    check(c.cost.per_item_overhead >= 0.0, "cost.per_item_overhead", "must be >= 0");
  }

  const std::string clock = top.string("clock", "simulated");
  if (clock == "simulated") {
    c.clock = ClockMode::Simulated;
  } else if (clock == "wall") {
    c.clock = ClockMode::Wall;
  } else {
    config_fail("clock", "expected \"simulated\" or \"wall\"");
  }
  c.seed = top.unsigned_integer("seed", c.seed);
  c.kg_probes = top.unsigned_integer("kg_probes", c.kg_probes);
  c.embed_dim = top.unsigned_integer("embed_dim", c.embed_dim);
  const std::string accounting = top.string("token_accounting", "trained");
  if (accounting == "trained") {
    c.token_accounting = TokenAccounting::Trained;
  } else if (accounting == "arrived") {
    c.token_accounting = TokenAccounting::Arrived;
  } else {
    config_fail("token_accounting", "expected \"trained\" or \"arrived\"");
  }
  top.finish();
  check(c.embed_dim >= 1, "embed_dim", "must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail("config_error", path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json stream;
  if (c.stream.generate) {
    stream["generate"] = to_json(*c.stream.generate);
  } else {
    stream["knowledge"] = c.stream.knowledge.string();
    stream["qa"] = c.stream.qa.string();
  }

  json learner;
  switch (c.learner.kind) {
    case LearnerKind::FactMemory: learner["kind"] = "fact_memory"; break;
    case LearnerKind::HashedSoftmax: learner["kind"] = "hashed_softmax"; break;
    case LearnerKind::External: learner["kind"] = "external"; break;
  }
  learner["capacity"] = c.learner.capacity == std::numeric_limits<std::size_t>::max()
                            ? json("unlimited")
                            : json(c.learner.capacity);
  learner["eviction"] = c.learner.eviction == Eviction::Lru ? "lru" : "random";
  learner["feature_dim"] = c.learner.feature_dim;
  learner["learning_rate"] = c.learner.learning_rate;
  learner["command"] = c.learner.command;
  learner["timeout_s"] = c.learner.timeout_s;

  const StrategyConfig& st = c.strategy;
  json strategy{{"kind", to_string(st.kind)},
                {"buffer_capacity", st.buffer_capacity},
                {"m0", st.mix_m0},
                {"gamma", st.mix_gamma},
                {"lambda0", st.reg_lambda0},
                {"schedule", to_string(st.reg_schedule)},
                {"decay", st.reg_decay},
                {"rank", st.rank},
                {"adapter_dim", st.adapter_dim},
                {"alpha", st.distill_alpha},
                {"teacher_refresh", st.teacher_refresh},
                {"cost_multiplier", st.multiplier()}};

  json budget;
  switch (c.budget.mode) {
    case BudgetMode::Unlimited: budget["mode"] = "unlimited"; break;
    case BudgetMode::Fixed: budget["mode"] = "fixed"; break;
    case BudgetMode::Reference: budget["mode"] = "reference"; break;
  }
  if (std::isfinite(c.budget.seconds)) budget["seconds"] = c.budget.seconds;
  budget["fraction"] = c.budget.fraction;
  budget["reference_strategy"] = to_string(c.budget.reference);

  return json{{"stream", stream},
              {"learner", learner},
              {"strategy", strategy},
              {"coreset",
               {{"method", to_string(c.coreset.method)},
                {"ratio", c.coreset.ratio},
                {"order", to_string(c.coreset.order)},
                {"selection_cost_fraction", c.coreset.selection_cost_fraction}}},
              {"budget", budget},
              {"cost",
               {{"per_token_cost", c.cost.per_token_cost},
                {"per_item_overhead", c.cost.per_item_overhead}}},
              {"clock", c.clock == ClockMode::Simulated ? "simulated" : "wall"},
              {"seed", c.seed},
              {"kg_probes", c.kg_probes},
              {"embed_dim", c.embed_dim},
              {"token_accounting",
               c.token_accounting == TokenAccounting::Trained ? "trained" : "arrived"}};
}

}  // namespace ockl
