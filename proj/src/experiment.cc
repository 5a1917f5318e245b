// Copyright 2026 The flsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flsim/experiment.h"

#include <fstream>
#include <set>
#include <sstream>

#include "flsim/errors.h"
#include "flsim/local_update.h"

namespace flsim {
namespace {

using Json = nlohmann::ordered_json;

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(Name("") + " must be an object");
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  T Get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!obj_.contains(key) || obj_.at(key).is_null()) return fallback;
    return Convert<T>(key);
  }

  template <class T>
  std::optional<T> GetOptional(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key) || obj_.at(key).is_null()) return std::nullopt;
    return Convert<T>(key);
  }

  template <class T>
  T Require(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(Name(key) + " is required");
    return Convert<T>(key);
  }

  // Child object; an absent key reads as an empty object.
  ObjectReader Child(const std::string& key) {
    seen_.insert(key);
    static const Json kEmpty = Json::object();
    return ObjectReader(obj_.contains(key) ? obj_.at(key) : kEmpty, Name(key));
  }

  void RejectUnknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + Name(key));
    }
  }

  std::string Name(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <class T>
  T Convert(const std::string& key) const {
    const Json& value = obj_.at(key);
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, uint64_t>) {
      if (!value.is_number_integer()) {
        throw ConfigError(Name(key) + " must be an integer");
      }
    }
    try {
      return value.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(Name(key) + " has the wrong type");
    }
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("model.activation must be relu or identity, got " + name);
}

LossKind ParseLoss(const std::string& name) {
  if (name == "softmax_cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  if (name == "mean_squared_error") return LossKind::kMeanSquaredError;
  throw ConfigError(
      "model.loss must be softmax_cross_entropy or mean_squared_error, got " +
      name);
}

LearningRate ParseLearningRate(ObjectReader r) {
  const std::string schedule = r.Get<std::string>("schedule", "constant");
  LearningRate lr;
  if (schedule == "constant") {
    lr = LearningRate::Constant(r.Get("eta", 0.01));
  } else if (schedule == "decaying") {
    lr = LearningRate::Decaying(r.Require<double>("mu"),
                                r.Require<double>("L"));
  } else {
    throw ConfigError(r.Name("schedule") +
                      " must be constant or decaying, got " + schedule);
  }
  r.RejectUnknown();
  return lr;
}

DefensePolicy ParseDefense(ObjectReader r) {
  const std::string kind = r.Get<std::string>("kind", "none");
  DefensePolicy policy;
  if (kind == "none") {
    policy = NoDefense{};
  } else if (kind == "flwbc") {
    policy = FlwbcDefense{r.Get("s", FlwbcDefense{}.s)};
  } else if (kind == "cma") {
    policy = CmaDefense{};
  } else if (kind == "ctma") {
    policy = CtmaDefense{r.Get("beta", CtmaDefense{}.beta)};
  } else if (kind == "cdp") {
    policy = CdpDefense{r.Get("clip", CdpDefense{}.clip),
                        r.Get("sigma", CdpDefense{}.sigma)};
  } else if (kind == "ldp") {
    policy = LdpDefense{r.Get("clip", LdpDefense{}.clip),
                        r.Get("sigma", LdpDefense{}.sigma)};
  } else {
    throw ConfigError(r.Name("kind") +
                      " must be none, flwbc, cma, ctma, cdp or ldp, got " +
                      kind);
  }
  r.RejectUnknown();
  ValidateDefense(policy);
  return policy;
}

Json DefenseToJson(const DefensePolicy& policy) {
  Json out;
  if (std::holds_alternative<NoDefense>(policy)) {
    out["kind"] = "none";
  } else if (const auto* d = std::get_if<FlwbcDefense>(&policy)) {
    out["kind"] = "flwbc";
    out["s"] = d->s;
  } else if (std::holds_alternative<CmaDefense>(policy)) {
    out["kind"] = "cma";
  } else if (const auto* c = std::get_if<CtmaDefense>(&policy)) {
    out["kind"] = "ctma";
    out["beta"] = c->beta;
  } else if (const auto* p = std::get_if<CdpDefense>(&policy)) {
    out["kind"] = "cdp";
    out["clip"] = p->clip;
    out["sigma"] = p->sigma;
  } else if (const auto* l = std::get_if<LdpDefense>(&policy)) {
    out["kind"] = "ldp";
    out["clip"] = l->clip;
    out["sigma"] = l->sigma;
  }
  return out;
}

DataConfig ParseData(ObjectReader r) {
  DataConfig data;
  ObjectReader source = r.Child("source");
  const std::string kind = source.Get<std::string>("kind", "synthetic");
  if (kind == "synthetic") {
    SyntheticSource s;
    s.classes = source.Get("classes", s.classes);
    s.dim = source.Get("dim", s.dim);
    s.per_class = source.Get("per_class", s.per_class);
    s.spread = source.Get("spread", s.spread);
    data.source = s;
  } else if (kind == "idx") {
    data.source = IdxSource{source.Require<std::string>("images"),
                            source.Require<std::string>("labels")};
  } else {
    throw ConfigError(source.Name("kind") + " must be synthetic or idx, got " +
                      kind);
  }
  source.RejectUnknown();
  data.seed = r.GetOptional<uint64_t>("seed");
  data.pool_fraction = r.Get("pool_fraction", data.pool_fraction);
  data.test_fraction = r.Get("test_fraction", data.test_fraction);

  ObjectReader partition = r.Child("partition");
  const std::string mode = partition.Get<std::string>("mode", "iid");
  if (mode == "noniid") {
    data.shards_per_client = partition.Get("shards_per_client", 2);
    if (data.shards_per_client < 1) {
      throw ConfigError(partition.Name("shards_per_client") + " must be >= 1");
    }
  } else if (mode != "iid") {
    throw ConfigError(partition.Name("mode") + " must be iid or noniid, got " +
                      mode);
  }
  partition.RejectUnknown();

  ObjectReader malicious = r.Child("malicious");
  data.malicious_size = malicious.Get("size", data.malicious_size);
  data.target_class = malicious.GetOptional<int>("target_class");
  malicious.RejectUnknown();
  if (data.malicious_size < 0) {
    throw ConfigError("data.malicious.size must be >= 0");
  }
  r.RejectUnknown();
  return data;
}

}  // namespace

ExperimentConfig ExperimentFromJson(const Json& doc) {
  ObjectReader root(doc, "");
  ExperimentConfig cfg;
  FederationConfig& fed = cfg.federation;
  fed.master_seed = root.Get<uint64_t>("seed", 0);

  ObjectReader f = root.Child("federation");
  fed.num_devices = f.Get("num_devices", fed.num_devices);
  fed.devices_per_round = f.Get("devices_per_round", fed.devices_per_round);
  fed.local_epochs = f.Get("local_epochs", fed.local_epochs);
  fed.batch_size = f.Get("batch_size", fed.batch_size);
  fed.learning_rate = ParseLearningRate(f.Child("learning_rate"));
  fed.rounds = f.Get("rounds", fed.rounds);
  if (f.Has("attacker_ids") && f.Has("num_attackers")) {
    throw ConfigError(
        "federation.attacker_ids and federation.num_attackers are exclusive");
  }
  if (auto ids = f.GetOptional<std::vector<int>>("attacker_ids")) {
    fed.attacker_ids = *ids;
  }
  if (auto count = f.GetOptional<int>("num_attackers")) {
    if (*count < 0) {
      throw ConfigError("federation.num_attackers must be >= 0");
    }
    fed.attacker_ids.clear();
    for (int id = 0; id < *count; ++id) fed.attacker_ids.push_back(id);
  }
  fed.adversarial_prob = f.Get("adversarial_prob", fed.adversarial_prob);
  fed.adversaries_per_round =
      f.Get("adversaries_per_round", fed.adversaries_per_round);
  f.RejectUnknown();

  ObjectReader a = root.Child("attack");
  fed.attack.alpha = a.Get("alpha", fed.attack.alpha);
  fed.attack.malicious_batch_size =
      a.Get("malicious_batch_size", fed.attack.malicious_batch_size);
  fed.attack.rh_lambda = a.GetOptional<double>("rh_lambda");
  a.RejectUnknown();

  fed.defense = ParseDefense(root.Child("defense"));
  cfg.data = ParseData(root.Child("data"));

  ObjectReader m = root.Child("model");
  cfg.model.hidden = m.Get("hidden", cfg.model.hidden);
  cfg.model.activation =
      ParseActivation(m.Get<std::string>("activation", "relu"));
  cfg.model.loss = ParseLoss(m.Get<std::string>("loss", "softmax_cross_entropy"));
  m.RejectUnknown();

  ObjectReader metrics = root.Child("metrics");
  cfg.horizon = metrics.Get("horizon", cfg.horizon);
  metrics.RejectUnknown();
  if (cfg.horizon < 1) throw ConfigError("metrics.horizon must be >= 1");

  ObjectReader output = root.Child("output");
  cfg.output_dir = output.Get<std::string>("dir", "");
  output.RejectUnknown();

  cfg.capture_trajectories = root.Get("capture_trajectories", false);
  root.RejectUnknown();

  fed.Validate();
  if (!fed.attacker_ids.empty() && cfg.data.malicious_size < 1) {
    throw ConfigError("data.malicious.size must be >= 1 when attackers exist");
  }
  return cfg;
}

ExperimentConfig LoadExperiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config", std::string("invalid JSON: ") + e.what());
  }
  return ExperimentFromJson(doc);
}

Json ExperimentToJson(const ExperimentConfig& cfg) {
  const FederationConfig& fed = cfg.federation;
  Json out;
  out["seed"] = fed.master_seed;

  Json f;
  f["num_devices"] = fed.num_devices;
  f["devices_per_round"] = fed.devices_per_round;
  f["local_epochs"] = fed.local_epochs;
  f["batch_size"] = fed.batch_size;
  Json lr;
  if (fed.learning_rate.kind == LearningRate::Kind::kConstant) {
    lr["schedule"] = "constant";
    lr["eta"] = fed.learning_rate.eta;
  } else {
    lr["schedule"] = "decaying";
    lr["mu"] = fed.learning_rate.mu;
    lr["L"] = fed.learning_rate.smoothness;
  }
  f["learning_rate"] = lr;
  f["rounds"] = fed.rounds;
  f["attacker_ids"] = fed.attacker_ids;
  f["adversarial_prob"] = fed.adversarial_prob;
  f["adversaries_per_round"] = fed.adversaries_per_round;
  out["federation"] = f;

  Json a;
  a["alpha"] = fed.attack.alpha;
  a["malicious_batch_size"] = fed.attack.malicious_batch_size;
  a["rh_lambda"] = fed.attack.rh_lambda ? Json(*fed.attack.rh_lambda) : Json();
  out["attack"] = a;
  out["defense"] = DefenseToJson(fed.defense);

  Json data;
  Json source;
  if (const auto* s = std::get_if<SyntheticSource>(&cfg.data.source)) {
    source["kind"] = "synthetic";
    source["classes"] = s->classes;
    source["dim"] = s->dim;
    source["per_class"] = s->per_class;
    source["spread"] = s->spread;
  } else {
    const auto& idx = std::get<IdxSource>(cfg.data.source);
    source["kind"] = "idx";
    source["images"] = idx.images;
    source["labels"] = idx.labels;
  }
  data["source"] = source;
  data["seed"] = cfg.data.seed ? Json(*cfg.data.seed) : Json();
  data["pool_fraction"] = cfg.data.pool_fraction;
  data["test_fraction"] = cfg.data.test_fraction;
  Json partition;
  if (cfg.data.shards_per_client > 0) {
    partition["mode"] = "noniid";
    partition["shards_per_client"] = cfg.data.shards_per_client;
  } else {
    partition["mode"] = "iid";
  }
  data["partition"] = partition;
  Json malicious;
  malicious["size"] = cfg.data.malicious_size;
  malicious["target_class"] =
      cfg.data.target_class ? Json(*cfg.data.target_class) : Json();
  data["malicious"] = malicious;
  out["data"] = data;

  Json model;
  model["hidden"] = cfg.model.hidden;
  model["activation"] =
      cfg.model.activation == Activation::kRelu ? "relu" : "identity";
  model["loss"] = cfg.model.loss == LossKind::kSoftmaxCrossEntropy
                      ? "softmax_cross_entropy"
                      : "mean_squared_error";
  out["model"] = model;
  out["metrics"] = Json{{"horizon", cfg.horizon}};
  out["output"] = Json{{"dir", cfg.output_dir}};
  out["capture_trajectories"] = cfg.capture_trajectories;
  return out;
}

Dataset GenerateData(const ExperimentConfig& cfg) {
  const uint64_t seed = cfg.data.seed.value_or(cfg.federation.master_seed);
  if (const auto* idx = std::get_if<IdxSource>(&cfg.data.source)) {
    return LoadIdx(idx->images, idx->labels);
  }
  const auto& s = std::get<SyntheticSource>(cfg.data.source);
  RngStream rng = DeriveRng(seed, 0, -1, RngPurpose::kData);
  return GenSynthetic(s.classes, s.dim, s.per_class, s.spread, rng);
}

ExperimentSetup BuildExperiment(const ExperimentConfig& cfg) {
  const uint64_t seed = cfg.data.seed.value_or(cfg.federation.master_seed);
  const Dataset all = GenerateData(cfg);
  RngStream split_rng = DeriveRng(seed, 1, -1, RngPurpose::kData);
  DataSplit split = SplitHoldout(all, cfg.data.pool_fraction,
                                 cfg.data.test_fraction, split_rng);

  ExperimentSetup setup;
  RngStream partition_rng = DeriveRng(seed, 2, -1, RngPurpose::kData);
  setup.data.shards =
      cfg.data.shards_per_client > 0
          ? PartitionNonIidShards(split.train, cfg.federation.num_devices,
                                  cfg.data.shards_per_client, partition_rng)
          : PartitionIid(split.train, cfg.federation.num_devices,
                         partition_rng);
  if (cfg.data.malicious_size > 0) {
    RngStream malicious_rng = DeriveRng(seed, 3, -1, RngPurpose::kData);
    setup.data.malicious =
        BuildMaliciousDataset(split.pool, cfg.data.malicious_size,
                              malicious_rng, cfg.data.target_class);
  }
  setup.data.train = std::move(split.train);
  setup.data.test = std::move(split.test);

  std::vector<int> dims{all.dim()};
  dims.insert(dims.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  dims.push_back(all.num_classes);
  setup.model = MakeModelSpec(dims, cfg.model.activation, cfg.model.loss);
  return setup;
}

}  // namespace flsim
