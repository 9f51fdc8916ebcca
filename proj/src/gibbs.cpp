#include "btr/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "btr/kernels.hpp"
#include "btr/polya_gamma.hpp"

namespace btr {

double RankAdaptionConfig::grow_prob(std::size_t iteration) const {
  return std::exp(kappa0 + kappa1 * static_cast<double>(iteration));
}

void RankAdaptionConfig::validate() const {
  if (epsilon < 0.0) throw InputError("adaption threshold must be non-negative");
  if (kappa0 > 0.0 || kappa1 > 0.0)
    throw InputError("growth schedule coefficients must be non-positive");
  if (min_rank < 1) throw InputError("min_rank must be at least 1");
  if (max_rank < min_rank) throw InputError("max_rank must be at least min_rank");
}

void GibbsConfig::validate() const {
  if (!(a0 > 1.0)) throw InputError("a0 must exceed 1 for shrinkage to tighten");
  if (!(alpha0 > 0.0) || !(beta0 > 0.0))
    throw InputError("noise precision prior parameters must be positive");
  if (!(psi > 0.0)) throw InputError("core prior precision must be positive");
  if (!(init_core_var > 0.0)) throw InputError("init core variance must be positive");
  if (init_rank < 1) throw InputError("init rank must be at least 1");
  if (thin < 1) throw InputError("thinning interval must be at least 1");
  adaption.validate();
  if (adaption.enabled &&
      (init_rank < adaption.min_rank || init_rank > adaption.max_rank))
    throw InputError("init rank lies outside the adaption bounds");
}

std::vector<std::size_t> PosteriorSamples::estimated_ranks() const {
  if (models.empty()) throw InputError("no retained draws");
  const std::size_t d_count = models.front().order();
  std::vector<std::size_t> est(d_count);
  for (std::size_t d = 0; d < d_count; ++d) {
    std::map<std::size_t, std::size_t> counts;
    for (const TRModel& m : models) counts[m.ranks[d]] += 1;
    std::size_t best = 0, best_count = 0;
    for (const auto& [rank, count] : counts)
      if (count > best_count) {
        best = rank;
        best_count = count;
      }
    est[d] = best;
  }
  return est;
}

double PosteriorSamples::predict_mean(const std::vector<std::size_t>& index) const {
  if (models.empty()) throw InputError("no retained draws");
  double acc = 0.0;
  for (const TRModel& m : models) acc += eval_entry(m, index);
  return acc / static_cast<double>(models.size());
}

double PosteriorSamples::predict_prob(const std::vector<std::size_t>& index) const {
  if (models.empty()) throw InputError("no retained draws");
  double acc = 0.0;
  for (const TRModel& m : models) acc += sigmoid(eval_entry(m, index));
  return acc / static_cast<double>(models.size());
}

namespace {

struct PairAcc {
  double a = 0.0;
  double b = 0.0;
  PairAcc& operator+=(const PairAcc& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
};

struct SumAcc {
  double v = 0.0;
  SumAcc& operator+=(const SumAcc& o) {
    v += o.v;
    return *this;
  }
};

void linear_terms(const std::vector<double>& diag, const std::vector<double>& lam,
                  std::vector<double>& xlin, const ExecPolicy& pol) {
  const std::size_t rout = lam.size();
  kernels::parallel_for(xlin.size(), pol, [&](std::size_t n) {
    const double* m = diag.data() + n * rout;
    double x = 0.0;
    for (std::size_t r = 0; r < rout; ++r) x += lam[r] * m[r];
    xlin[n] = x;
  });
}

}  // namespace

void sample_lambda(TRModel& model, const MgpState& mgp, const SparseTensor& data,
                   const AugmentationState& aug, Rng& rng, const ExecPolicy& pol) {
  const bool binary = data.kind() == DataKind::binary;
  const std::size_t n_obs = data.size();
  std::vector<double> sub, diag, xlin(n_obs);
  for (std::size_t d = 0; d < model.order(); ++d) {
    const std::size_t rout = model.bond_out(d), rin = model.bond_in(d);
    sub.resize(n_obs * rout * rin);
    diag.resize(n_obs * rout);
    kernels::subchains_at_mode(model, data, d, sub.data(), pol);
    kernels::diag_products(model, data, d, sub.data(), diag.data(), pol);
    std::vector<double>& lam = model.weights[d];
    const std::vector<double> phi = mgp.phi(d);
    linear_terms(diag, lam, xlin, pol);
    for (std::size_t r = 0; r < rout; ++r) {
      const double lam_r = lam[r];
      const PairAcc st = kernels::reduce_ordered(
          n_obs, PairAcc{}, pol, [&](std::size_t n, PairAcc& acc) {
            const double m = diag[n * rout + r];
            const double rest = xlin[n] - lam_r * m;
            if (binary) {
              const double om = aug.omega[n];
              acc.a += om * m * m;
              acc.b += m * (data.value(n) - 0.5 - om * rest);
            } else {
              acc.a += m * m;
              acc.b += m * (data.value(n) - rest);
            }
          });
      const double prec = binary ? phi[r] + st.a : phi[r] + aug.tau * st.a;
      const double mean = (binary ? st.b : aug.tau * st.b) / prec;
      const double lam_new = rng.normal(mean, 1.0 / std::sqrt(prec));
      const double shift = lam_new - lam_r;
      lam[r] = lam_new;
      if (shift != 0.0)
        kernels::parallel_for(n_obs, pol, [&](std::size_t n) {
          xlin[n] += shift * diag[n * rout + r];
        });
    }
  }
}

void sample_cores(TRModel& model, const SparseTensor& data,
                  const AugmentationState& aug, double psi, Rng& rng,
                  const ExecPolicy& pol) {
  const bool binary = data.kind() == DataKind::binary;
  const std::size_t n_obs = data.size();
  std::vector<double> sub, diag, xlin(n_obs);
  for (std::size_t d = 0; d < model.order(); ++d) {
    const kernels::ModeOrdering ord = kernels::build_mode_ordering(data, d);
    const std::size_t rout = model.bond_out(d), rin = model.bond_in(d);
    const std::size_t stride = rout * rin;
    sub.resize(n_obs * stride);
    diag.resize(n_obs * rout);
    kernels::subchains_at_mode(model, data, d, sub.data(), pol);
    kernels::diag_products(model, data, d, sub.data(), diag.data(), pol);
    const std::vector<double>& lam = model.weights[d];
    linear_terms(diag, lam, xlin, pol);

    const std::size_t extent = model.shape[d];
    std::vector<double> t_stat(extent), s_stat(extent), g_shift(extent);
    for (std::size_t ri = 0; ri < rin; ++ri)
      for (std::size_t ro = 0; ro < rout; ++ro) {
        const double w = lam[ro];
        // Per-slice statistics; slices are independent, entries within a
        // slice accumulate serially, so the result is thread-count stable.
        kernels::parallel_for(extent, pol, [&](std::size_t i) {
          const double g_cur = model.slice(d, i)[ri * rout + ro];
          double ti = 0.0, si = 0.0;
          for (std::size_t k = ord.offsets[i]; k < ord.offsets[i + 1]; ++k) {
            const std::size_t n = ord.perm[k];
            const double c = w * sub[n * stride + ro * rin + ri];
            const double rest = xlin[n] - c * g_cur;
            if (binary) {
              const double om = aug.omega[n];
              ti += om * c * c;
              si += c * (data.value(n) - 0.5 - om * rest);
            } else {
              ti += c * c;
              si += c * (data.value(n) - rest);
            }
          }
          t_stat[i] = ti;
          s_stat[i] = si;
        });
        for (std::size_t i = 0; i < extent; ++i) {
          const double prec = binary ? psi + t_stat[i] : psi + aug.tau * t_stat[i];
          const double mean = (binary ? s_stat[i] : aug.tau * s_stat[i]) / prec;
          const double g_new = rng.normal(mean, 1.0 / std::sqrt(prec));
          double& g_ref = model.cores[d][(i * rin + ri) * rout + ro];
          g_shift[i] = g_new - g_ref;
          g_ref = g_new;
        }
        kernels::parallel_for(n_obs, pol, [&](std::size_t n) {
          const double c = w * sub[n * stride + ro * rin + ri];
          xlin[n] += c * g_shift[data.index(n)[d]];
        });
      }
  }
}

void sample_tau(AugmentationState& aug, const TRModel& model,
                const SparseTensor& data, double alpha0, double beta0, Rng& rng,
                const ExecPolicy& pol) {
  std::vector<double> x(data.size());
  kernels::eval_all(model, data, x.data(), pol);
  const SumAcc ss = kernels::reduce_ordered(
      data.size(), SumAcc{}, pol, [&](std::size_t n, SumAcc& acc) {
        const double r = data.value(n) - x[n];
        acc.v += r * r;
      });
  aug.tau = rng.gamma(alpha0 + 0.5 * static_cast<double>(data.size()),
                      beta0 + 0.5 * ss.v);
}

void sample_omega(AugmentationState& aug, const TRModel& model,
                  const SparseTensor& data, const Rng& base,
                  std::uint64_t iteration, const ExecPolicy& pol) {
  std::vector<double> x(data.size());
  kernels::eval_all(model, data, x.data(), pol);
  aug.omega.resize(data.size());
  kernels::parallel_for(data.size(), pol, [&](std::size_t n) {
    Rng sub = base.substream(iteration, n);
    aug.omega[n] = sample_pg(sub, x[n]);
  });
}

std::vector<std::vector<double>> bond_contributions(const TRModel& model,
                                                    const SparseTensor& data,
                                                    const ExecPolicy& pol) {
  const std::size_t n_obs = data.size();
  std::vector<std::vector<double>> out(model.order());
  std::vector<double> sub, diag;
  for (std::size_t d = 0; d < model.order(); ++d) {
    const std::size_t rout = model.bond_out(d), rin = model.bond_in(d);
    out[d].assign(rout, 0.0);
    if (n_obs == 0) continue;
    sub.resize(n_obs * rout * rin);
    diag.resize(n_obs * rout);
    kernels::subchains_at_mode(model, data, d, sub.data(), pol);
    kernels::diag_products(model, data, d, sub.data(), diag.data(), pol);
    for (std::size_t r = 0; r < rout; ++r) {
      const SumAcc ss = kernels::reduce_ordered(
          n_obs, SumAcc{}, pol, [&](std::size_t n, SumAcc& acc) {
            const double m = diag[n * rout + r];
            acc.v += m * m;
          });
      out[d][r] = std::fabs(model.weights[d][r]) *
                  std::sqrt(ss.v / static_cast<double>(n_obs));
    }
  }
  return out;
}

std::vector<RankEvent> adapt_rank(TRModel& model, MgpState& mgp,
                                  std::size_t iteration,
                                  const RankAdaptionConfig& cfg, double a0,
                                  double psi,
                                  const std::vector<std::vector<double>>& contrib,
                                  Rng& rng) {
  if (contrib.size() != model.order())
    throw InputError("contribution table does not match the model order");
  std::vector<RankEvent> events;
  for (std::size_t d = 0; d < model.order(); ++d) {
    const std::size_t rank = model.ranks[d];
    if (contrib[d].size() != rank)
      throw InputError("contribution table does not match the model ranks");
    const double top = *std::max_element(contrib[d].begin(), contrib[d].end());

    std::vector<std::pair<double, std::size_t>> small;
    for (std::size_t r = 0; r < rank; ++r)
      if (contrib[d][r] < cfg.epsilon * top) small.emplace_back(contrib[d][r], r);

    // Drop the most-shrunk indices first, never going below min_rank.
    const std::size_t allowed = rank > cfg.min_rank ? rank - cfg.min_rank : 0;
    const std::size_t n_prune = std::min(small.size(), allowed);
    if (n_prune > 0) {
      std::sort(small.begin(), small.end());
      std::vector<std::size_t> victims;
      for (std::size_t k = 0; k < n_prune; ++k) victims.push_back(small[k].second);
      std::sort(victims.rbegin(), victims.rend());
      for (std::size_t r : victims) {
        prune_rank(model, d, r);
        mgp.delta[d].erase(mgp.delta[d].begin() + static_cast<std::ptrdiff_t>(r));
      }
      events.push_back({d, victims, false});
    } else if (rank < cfg.max_rank && rng.bernoulli(cfg.grow_prob(iteration))) {
      // Growth stays possible at the floor even when the surviving weight
      // sits below the prune threshold: a bond that has collapsed can only
      // recover through growth, so blocking it would make min_rank absorbing.
      const double delta_new = rng.gamma(a0, 1.0);
      double phi_new = delta_new;
      for (double v : mgp.delta[d]) phi_new *= v;
      grow_rank(model, d, std::sqrt(1.0 / psi), std::sqrt(1.0 / phi_new), rng);
      mgp.delta[d].push_back(delta_new);
      events.push_back({d, {}, true});
    }
  }
  return events;
}

GibbsSampler::GibbsSampler(SparseTensor data, GibbsConfig cfg, ExecPolicy pol)
    : data_(std::move(data)), cfg_(cfg), pol_(pol), rng_(cfg.seed) {
  cfg_.validate();
  data_.validate();
  if (data_.size() == 0) throw InputError("cannot fit a tensor with no observed entries");

  model_.shape = data_.shape();
  model_.ranks.assign(model_.order(), cfg_.init_rank);
  model_.cores.resize(model_.order());
  model_.weights.resize(model_.order());
  mgp_ = MgpState::prior_mean(model_.ranks, cfg_.a0);
  const double core_sigma = std::sqrt(cfg_.init_core_var);
  for (std::size_t d = 0; d < model_.order(); ++d) {
    model_.cores[d].resize(model_.shape[d] * cfg_.init_rank * cfg_.init_rank);
    for (double& v : model_.cores[d]) v = rng_.normal(0.0, core_sigma);
    const std::vector<double> phi = mgp_.phi(d);
    model_.weights[d].resize(cfg_.init_rank);
    for (std::size_t r = 0; r < cfg_.init_rank; ++r)
      model_.weights[d][r] = rng_.normal(0.0, 1.0 / std::sqrt(phi[r]));
  }
  aug_.tau = 1.0;
  if (data_.kind() == DataKind::binary)
    sample_omega(aug_, model_, data_, rng_, 0, pol_);
}

SweepInfo GibbsSampler::sweep() {
  sample_delta(mgp_, model_.weights, cfg_.a0, rng_);
  sample_lambda(model_, mgp_, data_, aug_, rng_, pol_);
  sample_cores(model_, data_, aug_, cfg_.psi, rng_, pol_);
  if (data_.kind() == DataKind::continuous)
    sample_tau(aug_, model_, data_, cfg_.alpha0, cfg_.beta0, rng_, pol_);
  else
    sample_omega(aug_, model_, data_, rng_, iteration_ + 1, pol_);

  std::vector<double> x(data_.size());
  kernels::eval_all(model_, data_, x.data(), pol_);
  const bool binary = data_.kind() == DataKind::binary;
  const SumAcc ss = kernels::reduce_ordered(
      data_.size(), SumAcc{}, pol_, [&](std::size_t n, SumAcc& acc) {
        const double fit = binary ? sigmoid(x[n]) : x[n];
        const double r = data_.value(n) - fit;
        acc.v += r * r;
      });

  SweepInfo info;
  info.pruned = 0;
  info.grown = 0;
  if (cfg_.adaption.enabled && iteration_ < cfg_.burn_in) {
    const std::vector<RankEvent> events =
        adapt_rank(model_, mgp_, iteration_ + 1, cfg_.adaption, cfg_.a0,
                   cfg_.psi, bond_contributions(model_, data_, pol_), rng_);
    for (const RankEvent& e : events) {
      info.pruned += e.pruned.size();
      info.grown += e.grew ? 1 : 0;
    }
  }

  iteration_ += 1;
  info.iteration = iteration_;
  info.resid_rms = std::sqrt(ss.v / static_cast<double>(data_.size()));
  info.tau = aug_.tau;
  info.ranks = model_.ranks;
  collected_.rank_trace.push_back(model_.ranks);
  collected_.resid_trace.push_back(info.resid_rms);
  const std::size_t total = cfg_.burn_in + cfg_.n_samples * cfg_.thin;
  if (iteration_ > cfg_.burn_in && iteration_ <= total &&
      (iteration_ - cfg_.burn_in) % cfg_.thin == 0)
    collected_.models.push_back(model_);
  return info;
}

const PosteriorSamples& GibbsSampler::run(
    const std::function<void(const SweepInfo&)>& observer) {
  const std::size_t total = cfg_.burn_in + cfg_.n_samples * cfg_.thin;
  while (iteration_ < total) {
    const SweepInfo info = sweep();
    if (observer) observer(info);
  }
  return collected_;
}

GibbsSnapshot GibbsSampler::snapshot() const {
  return {model_, mgp_, aug_, iteration_, rng_.state(), collected_};
}

void GibbsSampler::restore(const GibbsSnapshot& snap) {
  if (snap.model.shape != data_.shape())
    throw InputError("snapshot shape does not match the data");
  model_ = snap.model;
  mgp_ = snap.mgp;
  aug_ = snap.aug;
  iteration_ = snap.iteration;
  rng_.set_state(snap.rng_state);
  collected_ = snap.collected;
}

PosteriorSamples run_gibbs(const SparseTensor& data, const GibbsConfig& cfg,
                           const ExecPolicy& pol,
                           const std::function<void(const SweepInfo&)>& observer) {
  GibbsSampler sampler(data, cfg, pol);
  return sampler.run(observer);
}

}  // namespace btr
