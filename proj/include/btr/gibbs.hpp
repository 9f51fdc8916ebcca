#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "btr/common.hpp"
#include "btr/mgp.hpp"
#include "btr/rng.hpp"
#include "btr/sparse_tensor.hpp"
#include "btr/tr_model.hpp"

namespace btr {

/// Rank adaption schedule. During burn-in, bond indices whose share of the
/// fit falls below epsilon times their mode's strongest bond are pruned
/// (never below min_rank); a mode with nothing to prune grows one index
/// with probability exp(kappa0 + kappa1 * t), capped at max_rank.
struct RankAdaptionConfig {
  bool enabled = true;
  // The prune test compares contributions, not raw weights: the ring is
  // scale free, so cores and neighbouring weights can absorb amplitude and
  // pin a fully supported weight at any magnitude. Relative shares are the
  // only reading of the weights that survives that ambiguity.
  double epsilon = 0.05;
  // Growth must stay rarer than pruning is fast: a high growth rate
  // inflates the rank faster than shrinkage can cut it back. The decay is
  // chosen so growth is effectively over midway through a default burn-in;
  // a freshly grown bond needs a few sweeps to prune, so late growth would
  // leave junk bonds in the state that collection freezes.
  double kappa0 = -2.3;
  double kappa1 = -5e-3;
  std::size_t min_rank = 1;
  std::size_t max_rank = 30;

  double grow_prob(std::size_t iteration) const;
  void validate() const;
};

struct GibbsConfig {
  double a0 = 2.0;      // shrinkage multiplier prior shape (must be > 1)
  double alpha0 = 1.0;  // noise precision prior shape
  double beta0 = 0.3;   // noise precision prior rate
  double psi = 1.0;     // core entry prior precision
  std::size_t init_rank = 3;
  double init_core_var = 0.1;
  std::size_t burn_in = 1500;
  std::size_t n_samples = 100;
  std::size_t thin = 1;
  RankAdaptionConfig adaption;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Noise precision (continuous data) and Polya-Gamma variables (binary).
struct AugmentationState {
  double tau = 1.0;
  std::vector<double> omega;
};

/// One retained draw per kept sweep plus per-sweep diagnostics.
struct PosteriorSamples {
  std::vector<TRModel> models;
  std::vector<std::vector<std::size_t>> rank_trace;  // per sweep, per mode
  std::vector<double> resid_trace;                   // rms data residual per sweep

  /// Per-mode posterior mode of the ranks over the retained draws.
  std::vector<std::size_t> estimated_ranks() const;

  /// Posterior-mean prediction at one index (mean of per-draw values).
  double predict_mean(const std::vector<std::size_t>& index) const;

  /// Posterior-mean success probability (mean of per-draw sigmoids).
  double predict_prob(const std::vector<std::size_t>& index) const;
};

// Conditional updates, each a complete Gibbs pass over its block. All
// recompute the subchains they need from the current model state.

/// Bond weights for every mode. Uses aug.tau for continuous data and
/// aug.omega for binary data.
void sample_lambda(TRModel& model, const MgpState& mgp, const SparseTensor& data,
                   const AugmentationState& aug, Rng& rng, const ExecPolicy& pol);

/// Core slices for every mode, entry by entry; slices of unobserved
/// indices fall back to their N(0, 1/psi) prior.
void sample_cores(TRModel& model, const SparseTensor& data,
                  const AugmentationState& aug, double psi, Rng& rng,
                  const ExecPolicy& pol);

/// Noise precision from the squared residuals (continuous data only).
void sample_tau(AugmentationState& aug, const TRModel& model,
                const SparseTensor& data, double alpha0, double beta0, Rng& rng,
                const ExecPolicy& pol);

/// Polya-Gamma variables, one per observation (binary data only). Each
/// entry uses a substream keyed by (iteration, entry), so draws do not
/// depend on the thread count.
void sample_omega(AugmentationState& aug, const TRModel& model,
                  const SparseTensor& data, const Rng& base,
                  std::uint64_t iteration, const ExecPolicy& pol);

struct RankEvent {
  std::size_t mode;
  std::vector<std::size_t> pruned;  // bond indices removed, descending
  bool grew = false;
};

/// Root-mean-square contribution of each weighted bond to the model values
/// at the observed entries: contrib[d][r] = |w| * rms of the coefficient
/// that multiplies weight r of mode d. Summing the signed contributions
/// over a mode's bonds reproduces the model value at every entry.
std::vector<std::vector<double>> bond_contributions(const TRModel& model,
                                                    const SparseTensor& data,
                                                    const ExecPolicy& pol);

/// Prune-or-grow pass over all modes; keeps mgp.delta aligned with the
/// model ranks. contrib holds the per-bond shares from bond_contributions.
/// New multipliers come from their Ga(a0, 1) prior, new core entries from
/// N(0, 1/psi), and the new bond weight from N(0, 1/phi_new).
std::vector<RankEvent> adapt_rank(TRModel& model, MgpState& mgp,
                                  std::size_t iteration,
                                  const RankAdaptionConfig& cfg, double a0,
                                  double psi,
                                  const std::vector<std::vector<double>>& contrib,
                                  Rng& rng);

/// Per-sweep progress record passed to observers.
struct SweepInfo {
  std::size_t iteration;
  double resid_rms;
  double tau;
  std::vector<std::size_t> ranks;
  std::size_t pruned = 0;
  std::size_t grown = 0;
};

/// Everything needed to continue a chain exactly where it stopped.
struct GibbsSnapshot {
  TRModel model;
  MgpState mgp;
  AugmentationState aug;
  std::size_t iteration = 0;
  std::string rng_state;
  PosteriorSamples collected;
};

class GibbsSampler {
 public:
  GibbsSampler(SparseTensor data, GibbsConfig cfg, ExecPolicy pol);

  /// One pass in fixed block order: multipliers, bond weights, cores, then
  /// noise precision or Polya-Gamma variables; rank adaption runs after
  /// the pass while still in burn-in.
  SweepInfo sweep();

  /// Sweep until burn_in + n_samples * thin passes are done, collecting a
  /// model draw every thin-th post-burn-in sweep.
  const PosteriorSamples& run(
      const std::function<void(const SweepInfo&)>& observer = {});

  const TRModel& model() const { return model_; }
  const MgpState& mgp() const { return mgp_; }
  const AugmentationState& augmentation() const { return aug_; }
  std::size_t iteration() const { return iteration_; }
  const GibbsConfig& config() const { return cfg_; }
  const SparseTensor& data() const { return data_; }
  const PosteriorSamples& collected() const { return collected_; }

  GibbsSnapshot snapshot() const;
  void restore(const GibbsSnapshot& snap);

 private:
  SparseTensor data_;
  GibbsConfig cfg_;
  ExecPolicy pol_;
  TRModel model_;
  MgpState mgp_;
  AugmentationState aug_;
  Rng rng_;
  std::size_t iteration_ = 0;
  PosteriorSamples collected_;
};

/// Convenience wrapper: construct, run to completion, return the draws.
PosteriorSamples run_gibbs(const SparseTensor& data, const GibbsConfig& cfg,
                           const ExecPolicy& pol = {},
                           const std::function<void(const SweepInfo&)>& observer = {});

}  // namespace btr
