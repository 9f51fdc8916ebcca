#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "btr/common.hpp"
#include "btr/mgp.hpp"
#include "btr/rng.hpp"
#include "btr/sparse_tensor.hpp"
#include "btr/tr_model.hpp"

namespace btr {

struct OnlineConfig {
  double a0 = 2.0;
  double alpha0 = 1.0;
  double beta0 = 0.3;
  double psi = 1.0;
  std::size_t rank = 5;  // fixed; the online pass does not adapt ranks
  double init_core_var = 0.1;
  std::size_t batch_size = 512;
  std::size_t epochs = 100;
  double step = 0.01;
  double step_decay = 1.0;  // per-epoch multiplier on the step size
  double forget = 0.99;     // per-epoch decay of the running residual statistic
  bool adaptive = true;     // per-coordinate moment-scaled steps; plain ascent if false
  std::uint64_t seed = 0;

  void validate() const;
};

/// Variational factors: independent Gamma factors per shrinkage
/// multiplier, a Gamma factor for the noise precision (continuous), and
/// the per-observation tilt means for the current batch (binary).
struct VariationalState {
  std::vector<std::vector<double>> delta_shape;
  std::vector<std::vector<double>> delta_rate;
  double tau_shape = 1.0;
  double tau_rate = 1.0;
  double resid_stat = 0.0;  // forgetting-weighted full-data squared residual
  bool resid_seen = false;
  std::vector<double> e_omega;  // aligned with the most recent batch

  std::vector<double> e_delta(std::size_t d) const;
  /// Expected weight precisions: cumulative products of E[delta].
  std::vector<double> e_phi(std::size_t d) const;
  double e_tau() const { return tau_shape / tau_rate; }
};

/// Coordinate update for one multiplier factor: the Gamma shape/rate that
/// make q(delta[d][r]) optimal given the mode's weights and the means of
/// the other multiplier factors. Implemented independently of the Gibbs
/// conditional in mgp.hpp; the two agreeing is a tested property, so do
/// not fold them into one routine.
GammaParams expected_delta_update(double a0, const std::vector<double>& lambda,
                                  const std::vector<double>& e_delta,
                                  std::size_t r);

/// Tilt mean E[omega] at the current model value x (see polya_gamma_mean).
double expected_omega(double x);

/// First/second gradient moments for the adaptive ascent, one slot per
/// model coordinate.
struct OptState {
  std::vector<std::vector<double>> m_cores, v_cores, m_weights, v_weights;
  std::size_t t = 0;

  static OptState zeros_like(const TRModel& model);
};

/// Closed-form factor updates from one batch: all multiplier factors, the
/// batch tilts (binary), and the running residual statistic feeding the
/// noise precision factor (continuous). batch holds observation ids.
void e_step(const TRModel& model, const SparseTensor& data,
            std::span<const std::size_t> batch, VariationalState& state,
            const OnlineConfig& cfg, double forget_batch, const ExecPolicy& pol);

/// Stochastic bound on the data log likelihood plus expected prior terms
/// and factor entropies; batch terms are scaled by data.size()/batch.size().
double free_energy(const TRModel& model, const SparseTensor& data,
                   std::span<const std::size_t> batch,
                   const VariationalState& state, const OnlineConfig& cfg,
                   const ExecPolicy& pol);

/// One ascent step on the batch bound in cores and weights.
void m_step(TRModel& model, const SparseTensor& data,
            std::span<const std::size_t> batch, const VariationalState& state,
            OptState& opt, const OnlineConfig& cfg, double step_size,
            const ExecPolicy& pol);

struct OnlineInfo {
  std::size_t iteration;  // batches processed so far
  std::size_t epoch;
  double free_energy;
  double step_size;
};

struct OnlineResult {
  TRModel model;
  VariationalState state;
  std::vector<double> fe_trace;
};

/// Epoch-wise pass over shuffled batches: e_step, bound evaluation,
/// m_step. The final partial batch is kept (its terms are scaled up).
OnlineResult run_online(const SparseTensor& data, const OnlineConfig& cfg,
                        const ExecPolicy& pol = {},
                        const std::function<void(const OnlineInfo&)>& observer = {});

}  // namespace btr
