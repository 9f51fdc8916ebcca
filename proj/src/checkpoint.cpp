#include "btr/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace btr {

using nlohmann::json;

static void to_json(json& j, const TRModel& m) {
  j = json{{"shape", m.shape}, {"ranks", m.ranks}, {"cores", m.cores},
           {"weights", m.weights}};
}
static void from_json(const json& j, TRModel& m) {
  j.at("shape").get_to(m.shape);
  j.at("ranks").get_to(m.ranks);
  j.at("cores").get_to(m.cores);
  j.at("weights").get_to(m.weights);
  m.validate();
}

static void to_json(json& j, const MgpState& s) { j = json{{"delta", s.delta}}; }
static void from_json(const json& j, MgpState& s) { j.at("delta").get_to(s.delta); }

static void to_json(json& j, const AugmentationState& a) {
  j = json{{"tau", a.tau}, {"omega", a.omega}};
}
static void from_json(const json& j, AugmentationState& a) {
  j.at("tau").get_to(a.tau);
  j.at("omega").get_to(a.omega);
}

static void to_json(json& j, const PosteriorSamples& p) {
  j = json{{"models", p.models}, {"rank_trace", p.rank_trace},
           {"resid_trace", p.resid_trace}};
}
static void from_json(const json& j, PosteriorSamples& p) {
  j.at("models").get_to(p.models);
  j.at("rank_trace").get_to(p.rank_trace);
  j.at("resid_trace").get_to(p.resid_trace);
}

static void to_json(json& j, const RankAdaptionConfig& c) {
  j = json{{"enabled", c.enabled},   {"epsilon", c.epsilon},
           {"kappa0", c.kappa0},     {"kappa1", c.kappa1},
           {"min_rank", c.min_rank}, {"max_rank", c.max_rank}};
}
static void from_json(const json& j, RankAdaptionConfig& c) {
  j.at("enabled").get_to(c.enabled);
  j.at("epsilon").get_to(c.epsilon);
  j.at("kappa0").get_to(c.kappa0);
  j.at("kappa1").get_to(c.kappa1);
  j.at("min_rank").get_to(c.min_rank);
  j.at("max_rank").get_to(c.max_rank);
}

static void to_json(json& j, const GibbsConfig& c) {
  j = json{{"a0", c.a0},
           {"alpha0", c.alpha0},
           {"beta0", c.beta0},
           {"psi", c.psi},
           {"init_rank", c.init_rank},
           {"init_core_var", c.init_core_var},
           {"burn_in", c.burn_in},
           {"n_samples", c.n_samples},
           {"thin", c.thin},
           {"adaption", c.adaption},
           {"seed", c.seed}};
}
static void from_json(const json& j, GibbsConfig& c) {
  j.at("a0").get_to(c.a0);
  j.at("alpha0").get_to(c.alpha0);
  j.at("beta0").get_to(c.beta0);
  j.at("psi").get_to(c.psi);
  j.at("init_rank").get_to(c.init_rank);
  j.at("init_core_var").get_to(c.init_core_var);
  j.at("burn_in").get_to(c.burn_in);
  j.at("n_samples").get_to(c.n_samples);
  j.at("thin").get_to(c.thin);
  j.at("adaption").get_to(c.adaption);
  j.at("seed").get_to(c.seed);
}

static void to_json(json& j, const GibbsSnapshot& s) {
  j = json{{"model", s.model},         {"mgp", s.mgp},
           {"aug", s.aug},             {"iteration", s.iteration},
           {"rng_state", s.rng_state}, {"collected", s.collected}};
}
static void from_json(const json& j, GibbsSnapshot& s) {
  j.at("model").get_to(s.model);
  j.at("mgp").get_to(s.mgp);
  j.at("aug").get_to(s.aug);
  j.at("iteration").get_to(s.iteration);
  j.at("rng_state").get_to(s.rng_state);
  j.at("collected").get_to(s.collected);
}

static void to_json(json& j, const OnlineConfig& c) {
  j = json{{"a0", c.a0},
           {"alpha0", c.alpha0},
           {"beta0", c.beta0},
           {"psi", c.psi},
           {"rank", c.rank},
           {"init_core_var", c.init_core_var},
           {"batch_size", c.batch_size},
           {"epochs", c.epochs},
           {"step", c.step},
           {"step_decay", c.step_decay},
           {"forget", c.forget},
           {"adaptive", c.adaptive},
           {"seed", c.seed}};
}
static void from_json(const json& j, OnlineConfig& c) {
  j.at("a0").get_to(c.a0);
  j.at("alpha0").get_to(c.alpha0);
  j.at("beta0").get_to(c.beta0);
  j.at("psi").get_to(c.psi);
  j.at("rank").get_to(c.rank);
  j.at("init_core_var").get_to(c.init_core_var);
  j.at("batch_size").get_to(c.batch_size);
  j.at("epochs").get_to(c.epochs);
  j.at("step").get_to(c.step);
  j.at("step_decay").get_to(c.step_decay);
  j.at("forget").get_to(c.forget);
  j.at("adaptive").get_to(c.adaptive);
  j.at("seed").get_to(c.seed);
}

static void to_json(json& j, const VariationalState& s) {
  j = json{{"delta_shape", s.delta_shape}, {"delta_rate", s.delta_rate},
           {"tau_shape", s.tau_shape},     {"tau_rate", s.tau_rate},
           {"resid_stat", s.resid_stat},   {"resid_seen", s.resid_seen},
           {"e_omega", s.e_omega}};
}
static void from_json(const json& j, VariationalState& s) {
  j.at("delta_shape").get_to(s.delta_shape);
  j.at("delta_rate").get_to(s.delta_rate);
  j.at("tau_shape").get_to(s.tau_shape);
  j.at("tau_rate").get_to(s.tau_rate);
  j.at("resid_stat").get_to(s.resid_stat);
  j.at("resid_seen").get_to(s.resid_seen);
  j.at("e_omega").get_to(s.e_omega);
}

static void to_json(json& j, const OnlineResult& r) {
  j = json{{"model", r.model}, {"state", r.state}, {"fe_trace", r.fe_trace}};
}
static void from_json(const json& j, OnlineResult& r) {
  j.at("model").get_to(r.model);
  j.at("state").get_to(r.state);
  j.at("fe_trace").get_to(r.fe_trace);
}

namespace {

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "btr-checkpoint")
    throw InputError("'" + path + "' is not a checkpoint file");
  return j;
}

void dump_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write to '" + path + "' failed");
}

}  // namespace

void save_checkpoint(const std::string& path, const GibbsCheckpoint& cp) {
  json j{{"format", "btr-checkpoint"},
         {"engine", "gibbs"},
         {"version", 1},
         {"library", version_string()},
         {"kind", to_string(cp.kind)},
         {"config", cp.config},
         {"snapshot", cp.snapshot}};
  dump_file(path, j);
}

void save_checkpoint(const std::string& path, const OnlineCheckpoint& cp) {
  json j{{"format", "btr-checkpoint"},
         {"engine", "online"},
         {"version", 1},
         {"library", version_string()},
         {"kind", to_string(cp.kind)},
         {"config", cp.config},
         {"result", cp.result}};
  dump_file(path, j);
}

std::string checkpoint_engine(const std::string& path) {
  return load_file(path).value("engine", "");
}

GibbsCheckpoint load_gibbs_checkpoint(const std::string& path) {
  const json j = load_file(path);
  if (j.value("engine", "") != "gibbs")
    throw InputError("'" + path + "' is not a gibbs checkpoint");
  GibbsCheckpoint cp;
  try {
    j.at("config").get_to(cp.config);
    j.at("snapshot").get_to(cp.snapshot);
    cp.kind = data_kind_from_string(j.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is missing checkpoint fields: " + e.what());
  }
  return cp;
}

OnlineCheckpoint load_online_checkpoint(const std::string& path) {
  const json j = load_file(path);
  if (j.value("engine", "") != "online")
    throw InputError("'" + path + "' is not an online checkpoint");
  OnlineCheckpoint cp;
  try {
    j.at("config").get_to(cp.config);
    j.at("result").get_to(cp.result);
    cp.kind = data_kind_from_string(j.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is missing checkpoint fields: " + e.what());
  }
  return cp;
}

}  // namespace btr
