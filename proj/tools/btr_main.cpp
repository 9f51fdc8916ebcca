// btr: simulate, fit, predict, evaluate and benchmark sparse tensor
// completion models from the command line. Exit codes: 0 success, 2 usage
// or configuration error, 3 malformed input data, 4 numerical failure,
// 5 capacity guard.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "btr/checkpoint.hpp"
#include "btr/common.hpp"
#include "btr/gibbs.hpp"
#include "btr/kernels.hpp"
#include "btr/metrics.hpp"
#include "btr/online_em.hpp"
#include "btr/synthetic.hpp"
#include "btr/tensor_io.hpp"
#include "btr/tr_model.hpp"

using nlohmann::json;

namespace {

/// Configuration problems found after flag parsing; exits with code 2.
struct ConfigError : btr::Error {
  using Error::Error;
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw btr::InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw btr::InputError("write to '" + path + "' failed");
}

json base_manifest(const std::string& command, std::uint64_t seed,
                   const btr::ExecPolicy& pol) {
  return json{{"command", command},
              {"version", btr::version_string()},
              {"seed", seed},
              {"threads", pol.threads},
              {"deterministic", pol.deterministic}};
}

struct CommonOpts {
  int threads = 0;
  bool deterministic = false;

  btr::ExecPolicy policy() const { return {threads, deterministic}; }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--threads", o.threads, "Worker threads (0 = library default)");
  cmd->add_flag("--deterministic", o.deterministic,
                "Thread-count independent reductions");
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  CommonOpts common;
  std::vector<std::size_t> shape;
  std::size_t rank = 5;
  std::string kind = "continuous";
  double snr = 0.0;
  bool have_snr = false;
  double logit_gain = 8.0;
  double missing = 0.1;
  std::uint64_t seed = 0;
  std::size_t sparse_train = 0;
  std::size_t sparse_test = 0;
  std::string out;
};

int run_simulate(const SimulateOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  btr::SyntheticSpec spec;
  spec.shape = o.shape;
  spec.true_rank = o.rank;
  spec.kind = btr::data_kind_from_string(o.kind);
  spec.snr_db = o.have_snr ? o.snr : std::numeric_limits<double>::infinity();
  spec.logit_gain = o.logit_gain;
  spec.missing_rate = o.missing;
  spec.seed = o.seed;
  try {
    spec.validate();
  } catch (const btr::InputError& e) {
    throw ConfigError(e.what());
  }

  const btr::SyntheticData data =
      o.sparse_train > 0
          ? btr::generate_synthetic_sparse(spec, o.sparse_train, o.sparse_test)
          : btr::generate_synthetic(spec);

  const std::string train_path = o.out + "_train.txt";
  const std::string test_path = o.out + "_test.txt";
  btr::write_sparse(data.train, train_path);
  if (data.test.size() > 0) btr::write_sparse(data.test, test_path);

  json manifest = base_manifest("simulate", o.seed, o.common.policy());
  manifest["config"] = {{"shape", spec.shape},
                        {"rank", spec.true_rank},
                        {"kind", btr::to_string(spec.kind)},
                        {"snr_db", std::isinf(spec.snr_db) ? json("noiseless")
                                                           : json(spec.snr_db)},
                        {"logit_gain", spec.logit_gain},
                        {"missing_rate", spec.missing_rate},
                        {"sparse_train", o.sparse_train},
                        {"sparse_test", o.sparse_test}};
  manifest["outputs"] = {{"train", train_path}};
  if (data.test.size() > 0) manifest["outputs"]["test"] = test_path;
  manifest["true_ranks"] = data.truth.ranks;
  manifest["noise_sigma"] = data.noise_sigma;
  manifest["signal_range"] = data.signal_range;
  manifest["n_train"] = data.train.size();
  manifest["n_test"] = data.test.size();
  manifest["wall_seconds"] = elapsed_seconds(start);
  write_json_file(o.out + "_manifest.json", manifest);

  std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
            << " test entries (noise sigma " << data.noise_sigma << ")\n";
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  CommonOpts common;
  std::string data_path;
  std::string engine = "gibbs";
  std::string out;
  std::string resume;
  std::uint64_t seed = 0;
  bool quiet = false;

  btr::GibbsConfig gibbs;
  bool no_adapt = false;
  bool have_burn_in = false;
  bool have_samples = false;
  bool have_thin = false;
  btr::OnlineConfig online;
  bool plain_ascent = false;
};

int run_fit_gibbs(const FitOpts& o, const btr::SparseTensor& data,
                  std::chrono::steady_clock::time_point start) {
  btr::GibbsConfig cfg = o.gibbs;
  cfg.seed = o.seed;
  cfg.adaption.enabled = !o.no_adapt;
  std::size_t resume_from = 0;

  btr::GibbsSampler sampler = [&] {
    if (o.resume.empty()) {
      try {
        cfg.validate();
      } catch (const btr::InputError& e) {
        throw ConfigError(e.what());
      }
      return btr::GibbsSampler(data, cfg, o.common.policy());
    }
    // Resumed chains reuse the stored configuration; prior or seed flags
    // would silently fork the chain otherwise. Only the chain-length
    // fields may be overridden, which extends the run as if the original
    // invocation had asked for it.
    const btr::GibbsCheckpoint cp = btr::load_gibbs_checkpoint(o.resume);
    if (cp.kind != data.kind())
      throw btr::InputError("checkpoint was trained on a different data kind");
    cfg = cp.config;
    if (o.have_burn_in) cfg.burn_in = o.gibbs.burn_in;
    if (o.have_samples) cfg.n_samples = o.gibbs.n_samples;
    if (o.have_thin) cfg.thin = o.gibbs.thin;
    try {
      cfg.validate();
    } catch (const btr::InputError& e) {
      throw ConfigError(e.what());
    }
    btr::GibbsSampler s(data, cfg, o.common.policy());
    s.restore(cp.snapshot);
    resume_from = cp.snapshot.iteration;
    return s;
  }();

  const std::string log_path = o.out + "_log.jsonl";
  std::ofstream log(log_path);
  if (!log) throw btr::InputError("cannot open '" + log_path + "' for writing");

  const std::size_t total = cfg.burn_in + cfg.n_samples * cfg.thin;
  sampler.run([&](const btr::SweepInfo& info) {
    json line{{"iter", info.iteration},
              {"resid_rms", info.resid_rms},
              {"ranks", info.ranks},
              {"pruned", info.pruned},
              {"grown", info.grown}};
    if (data.kind() == btr::DataKind::continuous) line["tau"] = info.tau;
    log << line.dump() << '\n';
    if (!o.quiet && (info.iteration % 100 == 0 || info.iteration == total))
      std::cerr << "sweep " << info.iteration << "/" << total << " resid "
                << info.resid_rms << "\n";
  });

  const btr::PosteriorSamples& post = sampler.collected();
  const std::string cp_path = o.out + "_checkpoint.json";
  btr::save_checkpoint(cp_path, btr::GibbsCheckpoint{cfg, sampler.snapshot(),
                                                     data.kind()});

  const std::string trace_path = o.out + "_rank_trace.tsv";
  {
    std::ofstream trace(trace_path);
    if (!trace) throw btr::InputError("cannot open '" + trace_path + "' for writing");
    trace << "iter";
    for (std::size_t d = 0; d < data.order(); ++d) trace << "\trank" << d + 1;
    trace << '\n';
    for (std::size_t t = 0; t < post.rank_trace.size(); ++t) {
      trace << t + 1;
      for (std::size_t r : post.rank_trace[t]) trace << '\t' << r;
      trace << '\n';
    }
  }

  json manifest = base_manifest("fit", o.seed, o.common.policy());
  manifest["engine"] = "gibbs";
  manifest["inputs"] = {{"data", o.data_path}};
  if (!o.resume.empty()) {
    manifest["inputs"]["resume"] = o.resume;
    manifest["resumed_from_iteration"] = resume_from;
  }
  manifest["config"] = {{"a0", cfg.a0},
                        {"alpha0", cfg.alpha0},
                        {"beta0", cfg.beta0},
                        {"psi", cfg.psi},
                        {"init_rank", cfg.init_rank},
                        {"init_core_var", cfg.init_core_var},
                        {"burn_in", cfg.burn_in},
                        {"n_samples", cfg.n_samples},
                        {"thin", cfg.thin},
                        {"adaption_enabled", cfg.adaption.enabled},
                        {"epsilon", cfg.adaption.epsilon},
                        {"kappa0", cfg.adaption.kappa0},
                        {"kappa1", cfg.adaption.kappa1},
                        {"min_rank", cfg.adaption.min_rank},
                        {"max_rank", cfg.adaption.max_rank}};
  manifest["outputs"] = {{"checkpoint", cp_path},
                         {"log", log_path},
                         {"rank_trace", trace_path}};
  if (!post.models.empty()) manifest["estimated_ranks"] = post.estimated_ranks();
  manifest["wall_seconds"] = elapsed_seconds(start);
  write_json_file(o.out + "_manifest.json", manifest);

  std::cout << "retained " << post.models.size() << " draws after "
            << sampler.iteration() << " sweeps\n";
  if (!post.models.empty()) {
    std::cout << "estimated ranks:";
    for (std::size_t r : post.estimated_ranks()) std::cout << ' ' << r;
    std::cout << '\n';
  }
  return 0;
}

int run_fit_online(const FitOpts& o, const btr::SparseTensor& data,
                   std::chrono::steady_clock::time_point start) {
  btr::OnlineConfig cfg = o.online;
  cfg.seed = o.seed;
  cfg.adaptive = !o.plain_ascent;
  // Prior flags are shared between engines but bound to the gibbs struct.
  cfg.a0 = o.gibbs.a0;
  cfg.alpha0 = o.gibbs.alpha0;
  cfg.beta0 = o.gibbs.beta0;
  cfg.psi = o.gibbs.psi;
  cfg.init_core_var = o.gibbs.init_core_var;
  try {
    cfg.validate();
  } catch (const btr::InputError& e) {
    throw ConfigError(e.what());
  }

  const std::string log_path = o.out + "_log.jsonl";
  std::ofstream log(log_path);
  if (!log) throw btr::InputError("cannot open '" + log_path + "' for writing");

  btr::OnlineResult res =
      btr::run_online(data, cfg, o.common.policy(), [&](const btr::OnlineInfo& info) {
        log << json{{"iter", info.iteration},
                    {"epoch", info.epoch},
                    {"free_energy", info.free_energy},
                    {"step", info.step_size}}
                   .dump()
            << '\n';
        if (!o.quiet && info.iteration % 200 == 0)
          std::cerr << "batch " << info.iteration << " epoch " << info.epoch
                    << " bound " << info.free_energy << "\n";
      });

  const std::string cp_path = o.out + "_checkpoint.json";
  btr::save_checkpoint(cp_path, btr::OnlineCheckpoint{cfg, res, data.kind()});

  json manifest = base_manifest("fit", o.seed, o.common.policy());
  manifest["engine"] = "online";
  manifest["inputs"] = {{"data", o.data_path}};
  manifest["config"] = {{"a0", cfg.a0},       {"alpha0", cfg.alpha0},
                        {"beta0", cfg.beta0}, {"psi", cfg.psi},
                        {"rank", cfg.rank},   {"batch_size", cfg.batch_size},
                        {"epochs", cfg.epochs}, {"step", cfg.step},
                        {"step_decay", cfg.step_decay}, {"forget", cfg.forget},
                        {"adaptive", cfg.adaptive}};
  manifest["outputs"] = {{"checkpoint", cp_path}, {"log", log_path}};
  manifest["final_free_energy"] = res.fe_trace.empty() ? 0.0 : res.fe_trace.back();
  manifest["wall_seconds"] = elapsed_seconds(start);
  write_json_file(o.out + "_manifest.json", manifest);

  std::cout << "finished " << res.fe_trace.size() << " batches; final bound "
            << (res.fe_trace.empty() ? 0.0 : res.fe_trace.back()) << '\n';
  return 0;
}

int run_fit(const FitOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.engine != "gibbs" && o.engine != "online")
    throw ConfigError("unknown engine '" + o.engine + "'");
  if (o.engine == "online" && !o.resume.empty())
    throw ConfigError("--resume applies to the gibbs engine only");
  const btr::SparseTensor data = btr::read_sparse(o.data_path);
  return o.engine == "gibbs" ? run_fit_gibbs(o, data, start)
                             : run_fit_online(o, data, start);
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  CommonOpts common;
  std::string model_path;
  std::string indices_path;
  std::string out;
};

int run_predict(const PredictOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  const btr::SparseTensor where = btr::read_sparse(o.indices_path);
  const std::string engine = btr::checkpoint_engine(o.model_path);

  std::vector<double> pred(where.size());
  btr::DataKind kind;
  std::vector<std::size_t> idx(where.order());
  if (engine == "gibbs") {
    const btr::GibbsCheckpoint cp = btr::load_gibbs_checkpoint(o.model_path);
    kind = cp.kind;
    if (cp.snapshot.collected.models.empty())
      throw btr::InputError("checkpoint holds no retained draws; fit with n_samples > 0");
    if (cp.snapshot.model.shape != where.shape())
      throw btr::InputError("index file shape does not match the model");
    for (std::size_t n = 0; n < where.size(); ++n) {
      for (std::size_t d = 0; d < where.order(); ++d) idx[d] = where.index(n)[d];
      pred[n] = kind == btr::DataKind::binary
                    ? cp.snapshot.collected.predict_prob(idx)
                    : cp.snapshot.collected.predict_mean(idx);
    }
  } else {
    const btr::OnlineCheckpoint cp = btr::load_online_checkpoint(o.model_path);
    kind = cp.kind;
    if (cp.result.model.shape != where.shape())
      throw btr::InputError("index file shape does not match the model");
    for (std::size_t n = 0; n < where.size(); ++n) {
      for (std::size_t d = 0; d < where.order(); ++d) idx[d] = where.index(n)[d];
      const double x = btr::eval_entry(cp.result.model, idx);
      pred[n] = kind == btr::DataKind::binary ? btr::sigmoid(x) : x;
    }
  }

  // Predictions are real-valued (probabilities for binary models), so the
  // output file is always a continuous tensor.
  btr::SparseTensor out_tensor(where.shape(), btr::DataKind::continuous);
  out_tensor.reserve(where.size());
  for (std::size_t n = 0; n < where.size(); ++n) {
    for (std::size_t d = 0; d < where.order(); ++d) idx[d] = where.index(n)[d];
    out_tensor.add(idx, pred[n]);
  }
  btr::write_sparse(out_tensor, o.out);

  json manifest = base_manifest("predict", 0, o.common.policy());
  manifest["engine"] = engine;
  manifest["model_kind"] = btr::to_string(kind);
  manifest["inputs"] = {{"model", o.model_path}, {"indices", o.indices_path}};
  manifest["outputs"] = {{"predictions", o.out}};
  manifest["n_predictions"] = where.size();
  manifest["wall_seconds"] = elapsed_seconds(start);
  write_json_file(o.out + ".manifest.json", manifest);

  std::cout << "wrote " << where.size() << " predictions\n";
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
  CommonOpts common;
  std::string pred_path;
  std::string test_path;
  std::string out;
  double range = 0.0;
  bool have_range = false;
};

int run_eval(const EvalOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  const btr::SparseTensor pred = btr::read_sparse(o.pred_path);
  const btr::SparseTensor test = btr::read_sparse(o.test_path);
  if (pred.shape() != test.shape())
    throw btr::InputError("prediction and test shapes disagree");
  if (pred.size() != test.size())
    throw btr::InputError("prediction and test entry counts disagree");

  // Align predictions with test order through the linear cell index.
  std::unordered_map<std::size_t, double> by_cell;
  by_cell.reserve(pred.size() * 2);
  for (std::size_t n = 0; n < pred.size(); ++n) {
    std::size_t cell = 0;
    for (std::size_t d = 0; d < pred.order(); ++d)
      cell = cell * pred.shape()[d] + pred.index(n)[d];
    by_cell.emplace(cell, pred.value(n));
  }
  std::vector<double> aligned(test.size());
  for (std::size_t n = 0; n < test.size(); ++n) {
    std::size_t cell = 0;
    for (std::size_t d = 0; d < test.order(); ++d)
      cell = cell * test.shape()[d] + test.index(n)[d];
    const auto it = by_cell.find(cell);
    if (it == by_cell.end())
      throw btr::InputError("prediction file is missing a test index");
    aligned[n] = it->second;
  }

  double range = o.range;
  if (!o.have_range && test.kind() == btr::DataKind::continuous) {
    // Fall back to the spread of the held-out values.
    double lo = test.value(0), hi = test.value(0);
    for (std::size_t n = 1; n < test.size(); ++n) {
      lo = std::min(lo, test.value(n));
      hi = std::max(hi, test.value(n));
    }
    range = hi - lo;
  }

  const btr::MetricReport rep = btr::compute_metrics(aligned, test, range);
  const std::string text = rep.to_text();
  std::cout << text;
  {
    std::ofstream out(o.out);
    if (!out) throw btr::InputError("cannot open '" + o.out + "' for writing");
    out << text;
  }

  json manifest = base_manifest("eval", 0, o.common.policy());
  manifest["inputs"] = {{"predictions", o.pred_path}, {"test", o.test_path}};
  manifest["outputs"] = {{"metrics", o.out}};
  manifest["data_range"] = range;
  manifest["wall_seconds"] = elapsed_seconds(start);
  write_json_file(o.out + ".manifest.json", manifest);
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchOpts {
  CommonOpts common;
  std::vector<std::size_t> sizes;
  std::size_t order = 4;
  std::size_t rank = 2;
  double missing = 0.999;
  double snr = 20.0;
  std::size_t sweeps = 5;
  std::size_t epochs = 2;
  std::size_t batch = 512;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench(const BenchOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.sizes.empty()) throw ConfigError("--sizes must list at least one extent");
  if (o.order < 1) throw ConfigError("--order must be at least 1");
  if (o.sweeps < 1 || o.epochs < 1)
    throw ConfigError("--sweeps and --epochs must be at least 1");

  std::ostringstream table;
  table << "I\tn_obs\tgibbs_sweep_s\tonline_epoch_s\n";
  std::cout << "I\tn_obs\tgibbs_sweep_s\tonline_epoch_s\n";
  json rows = json::array();
  for (const std::size_t extent : o.sizes) {
    btr::SyntheticSpec spec;
    spec.shape.assign(o.order, extent);
    spec.true_rank = o.rank;
    spec.kind = btr::DataKind::continuous;
    spec.snr_db = o.snr;
    spec.missing_rate = 0.0;
    spec.seed = o.seed;
    double cells = 1.0;
    for (std::size_t e : spec.shape) cells *= static_cast<double>(e);
    const std::size_t n_obs = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround((1.0 - o.missing) * cells)));
    const btr::SyntheticData data = btr::generate_synthetic_sparse(spec, n_obs, 0);

    btr::GibbsConfig gcfg;
    gcfg.init_rank = o.rank;
    gcfg.adaption.enabled = false;
    gcfg.seed = o.seed;
    btr::GibbsSampler sampler(data.train, gcfg, o.common.policy());
    sampler.sweep();  // warm-up
    const auto g0 = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < o.sweeps; ++k) sampler.sweep();
    const double gibbs_s = elapsed_seconds(g0) / static_cast<double>(o.sweeps);

    btr::OnlineConfig ocfg;
    ocfg.rank = o.rank;
    ocfg.batch_size = o.batch;
    ocfg.epochs = o.epochs;
    ocfg.seed = o.seed;
    const auto o0 = std::chrono::steady_clock::now();
    btr::run_online(data.train, ocfg, o.common.policy());
    const double online_s = elapsed_seconds(o0) / static_cast<double>(o.epochs);

    table << extent << '\t' << data.train.size() << '\t' << gibbs_s << '\t'
          << online_s << '\n';
    std::cout << extent << '\t' << data.train.size() << '\t' << gibbs_s << '\t'
              << online_s << std::endl;
    rows.push_back({{"I", extent},
                    {"n_obs", data.train.size()},
                    {"gibbs_sweep_s", gibbs_s},
                    {"online_epoch_s", online_s}});
  }

  if (!o.out.empty()) {
    std::ofstream out(o.out);
    if (!out) throw btr::InputError("cannot open '" + o.out + "' for writing");
    out << table.str();
    json manifest = base_manifest("bench", o.seed, o.common.policy());
    manifest["config"] = {{"sizes", o.sizes},   {"order", o.order},
                          {"rank", o.rank},     {"missing", o.missing},
                          {"snr", o.snr},       {"sweeps", o.sweeps},
                          {"epochs", o.epochs}, {"batch", o.batch}};
    manifest["outputs"] = {{"table", o.out}};
    manifest["rows"] = rows;
    manifest["wall_seconds"] = elapsed_seconds(start);
    write_json_file(o.out + ".manifest.json", manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse tensor completion with tensor-ring factorizations"};
  app.set_version_flag("--version", btr::version_string());
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate synthetic data");
  sim_cmd->set_config("--config");
  sim_cmd->add_option("--shape", sim.shape, "Mode extents, e.g. --shape 10 10 10")
      ->required()
      ->delimiter(',');
  sim_cmd->add_option("--rank", sim.rank, "True ring rank");
  sim_cmd->add_option("--kind", sim.kind)->check(CLI::IsMember({"continuous", "binary"}));
  sim_cmd->add_option("--snr", sim.snr, "SNR in dB (omit for noiseless)");
  sim_cmd->add_option("--logit-gain", sim.logit_gain,
                      "Spread of the standardized binary logits");
  sim_cmd->add_option("--missing", sim.missing, "Held-out fraction");
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--sparse-train", sim.sparse_train,
                      "Generate exactly this many training entries (sparse path)");
  sim_cmd->add_option("--sparse-test", sim.sparse_test,
                      "Test entries for the sparse path");
  sim_cmd->add_option("--out", sim.out, "Output prefix")->required();
  add_common(sim_cmd, sim.common);

  FitOpts fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a completion model");
  fit_cmd->set_config("--config");
  fit_cmd->add_option("--data", fit.data_path, "Training entries")->required();
  fit_cmd->add_option("--engine", fit.engine)->check(CLI::IsMember({"gibbs", "online"}));
  fit_cmd->add_option("--out", fit.out, "Output prefix")->required();
  fit_cmd->add_option("--seed", fit.seed);
  fit_cmd->add_flag("--quiet", fit.quiet, "No progress on stderr");
  fit_cmd->add_option("--resume", fit.resume, "Continue from a gibbs checkpoint");
  fit_cmd->add_option("--a0", fit.gibbs.a0, "Shrinkage prior shape (both engines)");
  fit_cmd->add_option("--alpha0", fit.gibbs.alpha0, "Noise precision prior shape");
  fit_cmd->add_option("--beta0", fit.gibbs.beta0, "Noise precision prior rate");
  fit_cmd->add_option("--psi", fit.gibbs.psi, "Core prior precision");
  fit_cmd->add_option("--init-core-var", fit.gibbs.init_core_var);
  fit_cmd->add_option("--init-rank", fit.gibbs.init_rank, "Gibbs starting rank");
  fit_cmd->add_option("--burn-in", fit.gibbs.burn_in);
  fit_cmd->add_option("--samples", fit.gibbs.n_samples, "Retained draws");
  fit_cmd->add_option("--thin", fit.gibbs.thin);
  fit_cmd->add_flag("--no-adapt", fit.no_adapt, "Freeze the Gibbs ranks");
  fit_cmd->add_option("--epsilon", fit.gibbs.adaption.epsilon, "Prune threshold");
  fit_cmd->add_option("--kappa0", fit.gibbs.adaption.kappa0);
  fit_cmd->add_option("--kappa1", fit.gibbs.adaption.kappa1);
  fit_cmd->add_option("--min-rank", fit.gibbs.adaption.min_rank);
  fit_cmd->add_option("--max-rank", fit.gibbs.adaption.max_rank);
  fit_cmd->add_option("--rank", fit.online.rank, "Online fixed rank");
  fit_cmd->add_option("--batch", fit.online.batch_size);
  fit_cmd->add_option("--epochs", fit.online.epochs);
  fit_cmd->add_option("--step", fit.online.step);
  fit_cmd->add_option("--step-decay", fit.online.step_decay);
  fit_cmd->add_option("--forget", fit.online.forget);
  fit_cmd->add_flag("--plain", fit.plain_ascent,
                    "Plain gradient ascent instead of adaptive steps");
  add_common(fit_cmd, fit.common);

  PredictOpts pre;
  CLI::App* pre_cmd = app.add_subcommand("predict", "Evaluate a fitted model");
  pre_cmd->set_config("--config");
  pre_cmd->add_option("--model", pre.model_path, "Checkpoint file")->required();
  pre_cmd->add_option("--indices", pre.indices_path,
                      "Entries file naming the cells to predict")
      ->required();
  pre_cmd->add_option("--out", pre.out, "Predictions file")->required();
  add_common(pre_cmd, pre.common);

  EvalOpts ev;
  CLI::App* ev_cmd = app.add_subcommand("eval", "Score predictions");
  ev_cmd->set_config("--config");
  ev_cmd->add_option("--pred", ev.pred_path, "Predictions file")->required();
  ev_cmd->add_option("--test", ev.test_path, "Held-out entries")->required();
  ev_cmd->add_option("--out", ev.out, "Metrics file")->required();
  ev_cmd->add_option("--range", ev.range, "Signal range for psnr");
  add_common(ev_cmd, ev.common);

  BenchOpts be;
  CLI::App* be_cmd = app.add_subcommand("bench", "Time sweeps and epochs");
  be_cmd->set_config("--config");
  be_cmd->add_option("--sizes", be.sizes, "Mode extents to sweep")
      ->required()
      ->delimiter(',');
  be_cmd->add_option("--order", be.order);
  be_cmd->add_option("--rank", be.rank);
  be_cmd->add_option("--missing", be.missing);
  be_cmd->add_option("--snr", be.snr);
  be_cmd->add_option("--sweeps", be.sweeps, "Timed sweeps per size");
  be_cmd->add_option("--epochs", be.epochs, "Timed epochs per size");
  be_cmd->add_option("--batch", be.batch);
  be_cmd->add_option("--seed", be.seed);
  be_cmd->add_option("--out", be.out, "Table file (tsv)");
  add_common(be_cmd, be.common);

  try {
    app.parse(argc, argv);
    sim.have_snr = sim_cmd->count("--snr") > 0;
    ev.have_range = ev_cmd->count("--range") > 0;
    fit.have_burn_in = fit_cmd->count("--burn-in") > 0;
    fit.have_samples = fit_cmd->count("--samples") > 0;
    fit.have_thin = fit_cmd->count("--thin") > 0;
    if (*sim_cmd) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fit);
    if (*pre_cmd) return run_predict(pre);
    if (*ev_cmd) return run_eval(ev);
    if (*be_cmd) return run_bench(be);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const btr::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 3;
  } catch (const btr::CapacityError& e) {
    std::cerr << "capacity guard: " << e.what() << '\n';
    return 5;
  } catch (const btr::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const btr::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
