#include "gcs/harness/config.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::harness {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads keys out of one JSON table and rejects any key it was not asked for.
class Table {
 public:
  Table(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected a table");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  std::optional<Table> sub(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    return Table(*it, path_ + "." + key);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_json(const ordered_json& j) { return hex(fnv1a64(j.dump())); }

const char* mode_name(fl::PartitionMode m) {
  return m == fl::PartitionMode::kIid ? "iid" : "dirichlet";
}

const char* utility_name(collect::UtilityShape u) {
  return u == collect::UtilityShape::kLog1p ? "log1p" : "identity";
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.validate();
  partition.validate();
  budget.validate();
  collect.policies.favor.validate();
  collect.policies.fedmarl.validate();
  train.validate();
  if (!explicit_profiles.empty() && explicit_profiles.size() != sim.num_clients) {
    throw ConfigError("pool.profiles must list exactly sim.clients devices");
  }
  if (!(collect.policies.oort.epsilon >= 0.0 && collect.policies.oort.epsilon <= 1.0)) {
    throw ConfigError("collect.oort.epsilon must be in [0, 1]");
  }
  if (!(collect.policies.explore.epsilon >= 0.0 && collect.policies.explore.epsilon <= 1.0)) {
    throw ConfigError("collect.explore.epsilon must be in [0, 1]");
  }
  if (collect.collectors.empty()) throw ConfigError("collect.collectors is empty");
  effective_opt().validate(sim.num_clients);
  if (eval.seeds == 0) throw ConfigError("eval.seeds must be >= 1");
}

latent::OptConfig ExperimentConfig::effective_opt() const {
  latent::OptConfig opt = gcs.opt;
  if (gcs.auto_decode_length) {
    opt.max_decode_length =
        latent::default_max_decode_length(sim.participants, sim.num_clients);
  }
  return opt;
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Table root(doc, "config");
  root.get("seed", cfg.seed);

  if (auto t = root.sub("sim")) {
    t->get("clients", cfg.sim.num_clients);
    t->get("participants", cfg.sim.participants);
    t->get("rounds", cfg.sim.rounds);
    t->get("local_epochs", cfg.sim.local_epochs);
    t->get("learning_rate", cfg.sim.learning_rate);
    t->get("mu", cfg.sim.mu);
    t->get("batch_size", cfg.sim.batch_size);
    t->finish();
  }
  cfg.pool.num_clients = cfg.sim.num_clients;

  if (auto t = root.sub("pool")) {
    t->get("jitter", cfg.pool.jitter);
    t->get("availability_length", cfg.pool.availability_length);
    t->get("availability_spread", cfg.pool.availability_spread);
    if (const json* profiles = t->raw("profiles")) {
      if (!profiles->is_array()) throw ConfigError("config.pool.profiles: expected a list");
      for (std::size_t i = 0; i < profiles->size(); ++i) {
        Table p((*profiles)[i], "config.pool.profiles[" + std::to_string(i) + "]");
        DeviceProfile d;
        d.id = static_cast<DeviceId>(i);
        p.get("comm_latency_s", d.comm_latency_s);
        p.get("comp_latency_s_per_epoch", d.comp_latency_s_per_epoch);
        p.get("comm_energy_j", d.comm_energy_j);
        p.get("comp_energy_j_per_epoch", d.comp_energy_j_per_epoch);
        p.get("availability", d.availability);
        p.finish();
        cfg.explicit_profiles.push_back(std::move(d));
      }
    }
    t->finish();
  }

  if (auto t = root.sub("data")) {
    t->get("dimension", cfg.data.mixture.dimension);
    t->get("classes", cfg.data.mixture.num_classes);
    t->get("train_samples", cfg.data.mixture.train_samples);
    t->get("validation_samples", cfg.data.mixture.validation_samples);
    t->get("separation", cfg.data.mixture.separation);
    t->get("csv", cfg.data.csv_path);
    t->get("validation_fraction", cfg.data.validation_fraction);
    t->finish();
  }

  if (auto t = root.sub("partition")) {
    std::string mode = mode_name(cfg.partition.mode);
    t->get("mode", mode);
    if (mode == "iid") {
      cfg.partition.mode = fl::PartitionMode::kIid;
    } else if (mode == "dirichlet") {
      cfg.partition.mode = fl::PartitionMode::kDirichlet;
    } else {
      throw ConfigError("config.partition.mode must be 'iid' or 'dirichlet'");
    }
    t->get("beta", cfg.partition.beta);
    t->finish();
  }

  if (auto t = root.sub("budget")) {
    t->get("latency_s", cfg.budget.latency_budget_s);
    t->get("energy_j", cfg.budget.energy_budget_j);
    t->get("latency_exponent", cfg.budget.latency_penalty_exp);
    t->get("energy_exponent", cfg.budget.energy_penalty_exp);
    t->finish();
  }
  cfg.collect.policies.oort.deadline_s = cfg.budget.latency_budget_s;

  if (auto t = root.sub("collect")) {
    if (const json* list = t->raw("collectors")) {
      if (!list->is_array()) throw ConfigError("config.collect.collectors: expected a list");
      cfg.collect.collectors.clear();
      for (std::size_t i = 0; i < list->size(); ++i) {
        Table c((*list)[i], "config.collect.collectors[" + std::to_string(i) + "]");
        std::string policy;
        collect::CollectorSpec spec;
        c.get("policy", policy);
        c.get("sessions", spec.sessions);
        c.finish();
        spec.kind = collect::parse_policy_kind(policy);
        cfg.collect.collectors.push_back(spec);
      }
    }
    t->get("shuffles", cfg.collect.shuffles);
    t->get("fixed_reference", cfg.collect.fixed_reference);
    auto& pol = cfg.collect.policies;
    if (auto o = t->sub("oort")) {
      o->get("epsilon", pol.oort.epsilon);
      o->get("deadline_s", pol.oort.deadline_s);
      o->get("alpha", pol.oort.alpha);
      o->finish();
    }
    if (auto e = t->sub("explore")) {
      e->get("epsilon", pol.explore.epsilon);
      e->get("step", pol.explore.step);
      e->get("min_fraction", pol.explore.min_fraction);
      e->get("max_factor", pol.explore.max_factor);
      e->finish();
    }
    if (auto f = t->sub("fedmarl")) {
      f->get("w1", pol.fedmarl.w1);
      f->get("w2", pol.fedmarl.w2);
      f->get("w3", pol.fedmarl.w3);
      std::string shape = utility_name(pol.fedmarl.utility);
      f->get("utility", shape);
      if (shape == "identity") {
        pol.fedmarl.utility = collect::UtilityShape::kIdentity;
      } else if (shape == "log1p") {
        pol.fedmarl.utility = collect::UtilityShape::kLog1p;
      } else {
        throw ConfigError("config.collect.fedmarl.utility must be 'identity' or 'log1p'");
      }
      f->finish();
    }
    if (auto f = t->sub("favor")) {
      f->get("xi", pol.favor.xi);
      f->get("omega_target", pol.favor.omega_target);
      f->get("gamma", pol.favor.gamma);
      f->finish();
    }
    t->finish();
  }

  if (auto t = root.sub("train")) {
    t->get("batch_size", cfg.train.batch_size);
    t->get("learning_rate", cfg.train.learning_rate);
    t->get("alpha", cfg.train.alpha);
    t->get("epochs", cfg.train.epochs);
    t->get("patience", cfg.train.patience);
    t->get("min_delta", cfg.train.min_delta);
    t->get("embedding", cfg.train.embedding);
    t->get("hidden", cfg.train.hidden);
    t->get("evaluator_hidden", cfg.train.evaluator_hidden);
    std::string precision = cfg.train.single_precision ? "float32" : "float64";
    t->get("precision", precision);
    if (precision != "float32" && precision != "float64") {
      throw ConfigError("config.train.precision must be 'float32' or 'float64'");
    }
    cfg.train.single_precision = precision == "float32";
    t->finish();
  }

  if (auto t = root.sub("gcs")) {
    auto& opt = cfg.gcs.opt;
    t->get("top_k", opt.top_k);
    t->get("step_size", opt.step_size);
    t->get("max_steps", opt.max_steps);
    t->get("shrink", opt.shrink);
    t->get("min_step", opt.min_step);
    t->get("beam_width", opt.beam_width);
    std::size_t max_len = 0;
    t->get("max_decode_length", max_len);
    if (max_len > 0) {
      opt.max_decode_length = max_len;
      cfg.gcs.auto_decode_length = false;
    }
    t->get("rescore_by_round", cfg.gcs.rescore_by_round);
    t->get("online_records", cfg.gcs.online_records);
    t->get("supersede_observed", cfg.gcs.supersede_observed);
    t->finish();
  }

  if (auto t = root.sub("eval")) {
    t->get("seeds", cfg.eval.seeds);
    if (const json* target = t->raw("target_accuracy")) {
      if (!target->is_null()) {
        if (!target->is_number()) throw ConfigError("config.eval.target_accuracy: wrong type");
        cfg.eval.target_accuracy = target->get<double>();
      }
    }
    t->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  ordered_json pool{{"jitter", cfg.pool.jitter},
                    {"availability_length", cfg.pool.availability_length},
                    {"availability_spread", cfg.pool.availability_spread}};
  if (!cfg.explicit_profiles.empty()) {
    ordered_json profiles = ordered_json::array();
    for (const DeviceProfile& d : cfg.explicit_profiles) {
      profiles.push_back({{"comm_latency_s", d.comm_latency_s},
                          {"comp_latency_s_per_epoch", d.comp_latency_s_per_epoch},
                          {"comm_energy_j", d.comm_energy_j},
                          {"comp_energy_j_per_epoch", d.comp_energy_j_per_epoch},
                          {"availability", d.availability}});
    }
    pool["profiles"] = std::move(profiles);
  }
  j["pool"] = std::move(pool);
  const auto& m = cfg.data.mixture;
  j["data"] = {{"dimension", m.dimension},
               {"classes", m.num_classes},
               {"train_samples", m.train_samples},
               {"validation_samples", m.validation_samples},
               {"separation", m.separation},
               {"csv", cfg.data.csv_path},
               {"validation_fraction", cfg.data.validation_fraction}};
  j["partition"] = {{"mode", mode_name(cfg.partition.mode)}, {"beta", cfg.partition.beta}};
  j["sim"] = {{"clients", cfg.sim.num_clients},
              {"participants", cfg.sim.participants},
              {"rounds", cfg.sim.rounds},
              {"local_epochs", cfg.sim.local_epochs},
              {"learning_rate", cfg.sim.learning_rate},
              {"mu", cfg.sim.mu},
              {"batch_size", cfg.sim.batch_size}};
  j["budget"] = {{"latency_s", cfg.budget.latency_budget_s},
                 {"energy_j", cfg.budget.energy_budget_j},
                 {"latency_exponent", cfg.budget.latency_penalty_exp},
                 {"energy_exponent", cfg.budget.energy_penalty_exp}};
  ordered_json collectors = ordered_json::array();
  for (const auto& c : cfg.collect.collectors) {
    collectors.push_back({{"policy", collect::to_string(c.kind)}, {"sessions", c.sessions}});
  }
  const auto& pol = cfg.collect.policies;
  j["collect"] = {
      {"collectors", std::move(collectors)},
      {"shuffles", cfg.collect.shuffles},
      {"fixed_reference", cfg.collect.fixed_reference},
      {"oort", {{"epsilon", pol.oort.epsilon},
                {"deadline_s", pol.oort.deadline_s},
                {"alpha", pol.oort.alpha}}},
      {"explore", {{"epsilon", pol.explore.epsilon},
                   {"step", pol.explore.step},
                   {"min_fraction", pol.explore.min_fraction},
                   {"max_factor", pol.explore.max_factor}}},
      {"fedmarl", {{"w1", pol.fedmarl.w1},
                   {"w2", pol.fedmarl.w2},
                   {"w3", pol.fedmarl.w3},
                   {"utility", utility_name(pol.fedmarl.utility)}}},
      {"favor", {{"xi", pol.favor.xi},
                 {"omega_target", pol.favor.omega_target},
                 {"gamma", pol.favor.gamma}}}};
  const auto& t = cfg.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"alpha", t.alpha},
                {"epochs", t.epochs},
                {"patience", t.patience},
                {"min_delta", t.min_delta},
                {"embedding", t.embedding},
                {"hidden", t.hidden},
                {"evaluator_hidden", t.evaluator_hidden},
                {"precision", t.single_precision ? "float32" : "float64"}};
  const auto& o = cfg.gcs.opt;
  j["gcs"] = {{"top_k", o.top_k},
              {"step_size", o.step_size},
              {"max_steps", o.max_steps},
              {"shrink", o.shrink},
              {"min_step", o.min_step},
              {"beam_width", o.beam_width},
              {"max_decode_length", cfg.gcs.auto_decode_length ? 0 : o.max_decode_length},
              {"rescore_by_round", cfg.gcs.rescore_by_round},
              {"online_records", cfg.gcs.online_records},
              {"supersede_observed", cfg.gcs.supersede_observed}};
  j["eval"] = {{"seeds", cfg.eval.seeds},
               {"target_accuracy", cfg.eval.target_accuracy
                                       ? ordered_json(*cfg.eval.target_accuracy)
                                       : ordered_json(nullptr)}};
  return j;
}

std::string environment_hash(const ExperimentConfig& cfg) {
  const ordered_json j = to_json(cfg);
  return hash_json({{"seed", j["seed"]},
                    {"pool", j["pool"]},
                    {"data", j["data"]},
                    {"partition", j["partition"]},
                    {"sim", j["sim"]}});
}

std::string corpus_hash(const ExperimentConfig& cfg) {
  const ordered_json j = to_json(cfg);
  return hash_json({{"environment", environment_hash(cfg)},
                    {"budget", j["budget"]},
                    {"collect", j["collect"]}});
}

std::string model_hash(const ExperimentConfig& cfg) {
  const ordered_json j = to_json(cfg);
  return hash_json({{"corpus", corpus_hash(cfg)}, {"train", j["train"]}});
}

std::string run_hash(const ExperimentConfig& cfg) {
  const ordered_json j = to_json(cfg);
  return hash_json({{"model", model_hash(cfg)}, {"gcs", j["gcs"]}, {"eval", j["eval"]}});
}

}  // namespace gcs::harness
