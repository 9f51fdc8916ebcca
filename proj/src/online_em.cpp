#include "btr/online_em.hpp"

#include <algorithm>
#include <cmath>

#include "btr/kernels.hpp"
#include "btr/smallmat.hpp"

namespace btr {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double digamma(double x) {
  // Recurrence up to the asymptotic regime, then the standard expansion.
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) +
         (1.0 - shape) * digamma(shape);
}

std::size_t uniform_rank(const TRModel& model) {
  const std::size_t r = model.ranks[0];
  for (std::size_t v : model.ranks)
    if (v != r) throw InputError("the online pass requires uniform ranks");
  return r;
}

// Subchains at every mode plus the model value for one observation:
// out_sub[d] gets the R x R product of absorbed slices of all modes but d,
// in ring order. scratch must hold 3 * D * R^2 doubles.
void all_subchains(const TRModel& model, const std::uint32_t* idx,
                   std::size_t rank, double* out_sub, double& out_x,
                   double* scratch) {
  const std::size_t d_count = model.order();
  const std::size_t r2 = rank * rank;
  double* h = scratch;                  // absorbed slices
  double* pre = scratch + d_count * r2; // prefix products H0..Hd
  double* suf = pre + d_count * r2;     // suffix products Hd..H(D-1)

  for (std::size_t d = 0; d < d_count; ++d) {
    const double* g = model.slice(d, idx[d]);
    const double* w = model.weights[d].data();
    double* hd = h + d * r2;
    for (std::size_t a = 0; a < rank; ++a)
      for (std::size_t b = 0; b < rank; ++b) hd[a * rank + b] = g[a * rank + b] * w[b];
  }
  std::copy(h, h + r2, pre);
  for (std::size_t d = 1; d < d_count; ++d)
    smallmat::mul(pre + (d - 1) * r2, h + d * r2, pre + d * r2, rank, rank, rank);
  std::copy(h + (d_count - 1) * r2, h + d_count * r2, suf + (d_count - 1) * r2);
  for (std::size_t d = d_count - 1; d-- > 0;)
    smallmat::mul(h + d * r2, suf + (d + 1) * r2, suf + d * r2, rank, rank, rank);

  out_x = smallmat::trace(pre + (d_count - 1) * r2, rank);
  if (d_count == 1) {
    for (std::size_t a = 0; a < rank; ++a)
      for (std::size_t b = 0; b < rank; ++b) out_sub[a * rank + b] = (a == b) ? 1.0 : 0.0;
    return;
  }
  std::copy(suf + r2, suf + 2 * r2, out_sub);  // mode 0: H1..H(D-1)
  for (std::size_t d = 1; d + 1 < d_count; ++d)
    smallmat::mul(suf + (d + 1) * r2, pre + (d - 1) * r2, out_sub + d * r2, rank,
                  rank, rank);
  std::copy(pre + (d_count - 2) * r2, pre + (d_count - 1) * r2,
            out_sub + (d_count - 1) * r2);
}

// Data-term derivative in the model value x.
double residual_factor(DataKind kind, double y, double x, double e_tau,
                       double e_om) {
  if (kind == DataKind::binary) return (y - 0.5) - e_om * x;
  return e_tau * (y - x);
}

}  // namespace

void OnlineConfig::validate() const {
  if (!(a0 > 1.0)) throw InputError("a0 must exceed 1 for shrinkage to tighten");
  if (!(alpha0 > 0.0) || !(beta0 > 0.0))
    throw InputError("noise precision prior parameters must be positive");
  if (!(psi > 0.0)) throw InputError("core prior precision must be positive");
  if (rank < 1) throw InputError("rank must be at least 1");
  if (!(init_core_var > 0.0)) throw InputError("init core variance must be positive");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (!(step > 0.0)) throw InputError("step size must be positive");
  if (!(step_decay > 0.0) || step_decay > 1.0)
    throw InputError("step decay must lie in (0, 1]");
  if (!(forget > 0.0) || forget > 1.0) throw InputError("forget must lie in (0, 1]");
}

std::vector<double> VariationalState::e_delta(std::size_t d) const {
  std::vector<double> out(delta_shape[d].size());
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = delta_shape[d][r] / delta_rate[d][r];
  return out;
}

std::vector<double> VariationalState::e_phi(std::size_t d) const {
  std::vector<double> out = e_delta(d);
  for (std::size_t r = 1; r < out.size(); ++r) out[r] *= out[r - 1];
  return out;
}

GammaParams expected_delta_update(double a0, const std::vector<double>& lambda,
                                  const std::vector<double>& e_delta,
                                  std::size_t r) {
  const std::size_t rank = lambda.size();
  if (e_delta.size() != rank) throw InputError("lambda and e_delta lengths disagree");
  if (r >= rank) throw InputError("bond index out of range");
  // Prefix products of the means, then divide the r-th factor back out.
  std::vector<double> cum(rank);
  double p = 1.0;
  for (std::size_t l = 0; l < rank; ++l) {
    p *= e_delta[l];
    cum[l] = p;
  }
  double acc = 0.0;
  for (std::size_t h = r; h < rank; ++h)
    acc += lambda[h] * lambda[h] * (cum[h] / e_delta[r]);
  return {a0 + 0.5 * static_cast<double>(rank - r), 1.0 + 0.5 * acc};
}

double expected_omega(double x) {
  const double a = std::fabs(x);
  if (a < 1e-3) {
    const double x2 = x * x;
    return 0.25 - x2 / 48.0 + x2 * x2 / 480.0;
  }
  return std::tanh(0.5 * x) / (2.0 * x);
}

OptState OptState::zeros_like(const TRModel& model) {
  OptState o;
  o.m_cores.resize(model.order());
  o.v_cores.resize(model.order());
  o.m_weights.resize(model.order());
  o.v_weights.resize(model.order());
  for (std::size_t d = 0; d < model.order(); ++d) {
    o.m_cores[d].assign(model.cores[d].size(), 0.0);
    o.v_cores[d].assign(model.cores[d].size(), 0.0);
    o.m_weights[d].assign(model.weights[d].size(), 0.0);
    o.v_weights[d].assign(model.weights[d].size(), 0.0);
  }
  return o;
}

void e_step(const TRModel& model, const SparseTensor& data,
            std::span<const std::size_t> batch, VariationalState& state,
            const OnlineConfig& cfg, double forget_batch, const ExecPolicy& pol) {
  for (std::size_t d = 0; d < model.order(); ++d) {
    std::vector<double> means = state.e_delta(d);
    for (std::size_t r = 0; r < means.size(); ++r) {
      const GammaParams g =
          expected_delta_update(cfg.a0, model.weights[d], means, r);
      state.delta_shape[d][r] = g.shape;
      state.delta_rate[d][r] = g.rate;
      means[r] = g.shape / g.rate;
    }
  }

  std::vector<double> x(batch.size());
  kernels::parallel_for(batch.size(), pol, [&](std::size_t j) {
    const std::size_t r = model.max_rank();
    std::vector<double> buf_a(r * r), buf_b(r * r);
    x[j] = eval_entry_ws(model, data.index(batch[j]), buf_a.data(), buf_b.data());
  });

  if (data.kind() == DataKind::binary) {
    state.e_omega.resize(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j)
      state.e_omega[j] = expected_omega(x[j]);
    return;
  }

  double batch_ss = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double r = data.value(batch[j]) - x[j];
    batch_ss += r * r;
  }
  const double scale =
      static_cast<double>(data.size()) / static_cast<double>(batch.size());
  const double estimate = scale * batch_ss;
  state.resid_stat = state.resid_seen
                         ? forget_batch * state.resid_stat + (1.0 - forget_batch) * estimate
                         : estimate;
  state.resid_seen = true;
  state.tau_shape = cfg.alpha0 + 0.5 * static_cast<double>(data.size());
  state.tau_rate = cfg.beta0 + 0.5 * state.resid_stat;
}

double free_energy(const TRModel& model, const SparseTensor& data,
                   std::span<const std::size_t> batch,
                   const VariationalState& state, const OnlineConfig& cfg,
                   const ExecPolicy& pol) {
  const bool binary = data.kind() == DataKind::binary;
  if (binary && state.e_omega.size() != batch.size())
    throw InputError("tilt means are not aligned with this batch; run e_step first");
  const double scale =
      static_cast<double>(data.size()) / static_cast<double>(batch.size());
  const double e_tau = state.e_tau();
  const double e_log_tau = digamma(state.tau_shape) - std::log(state.tau_rate);

  std::vector<double> x(batch.size());
  kernels::parallel_for(batch.size(), pol, [&](std::size_t j) {
    const std::size_t r = model.max_rank();
    std::vector<double> buf_a(r * r), buf_b(r * r);
    x[j] = eval_entry_ws(model, data.index(batch[j]), buf_a.data(), buf_b.data());
  });

  double data_term = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double y = data.value(batch[j]);
    if (binary) {
      data_term += (y - 0.5) * x[j] - 0.5 * state.e_omega[j] * x[j] * x[j] -
                   std::log(2.0);
    } else {
      const double r = y - x[j];
      data_term += 0.5 * (e_log_tau - kLog2Pi) - 0.5 * e_tau * r * r;
    }
  }

  double fe = scale * data_term;

  for (std::size_t d = 0; d < model.order(); ++d) {
    for (double g : model.cores[d])
      fe += -0.5 * cfg.psi * g * g + 0.5 * (std::log(cfg.psi) - kLog2Pi);
    const std::vector<double> phi = state.e_phi(d);
    double e_log_phi = 0.0;
    for (std::size_t r = 0; r < model.ranks[d]; ++r) {
      e_log_phi += digamma(state.delta_shape[d][r]) - std::log(state.delta_rate[d][r]);
      const double lam = model.weights[d][r];
      fe += -0.5 * phi[r] * lam * lam + 0.5 * (e_log_phi - kLog2Pi);
      const double e_log_delta =
          digamma(state.delta_shape[d][r]) - std::log(state.delta_rate[d][r]);
      const double e_delta = state.delta_shape[d][r] / state.delta_rate[d][r];
      fe += (cfg.a0 - 1.0) * e_log_delta - e_delta - std::lgamma(cfg.a0);
      fe += gamma_entropy(state.delta_shape[d][r], state.delta_rate[d][r]);
    }
  }
  if (!binary) {
    fe += (cfg.alpha0 - 1.0) * e_log_tau - cfg.beta0 * e_tau +
          cfg.alpha0 * std::log(cfg.beta0) - std::lgamma(cfg.alpha0);
    fe += gamma_entropy(state.tau_shape, state.tau_rate);
  }
  return fe;
}

void m_step(TRModel& model, const SparseTensor& data,
            std::span<const std::size_t> batch, const VariationalState& state,
            OptState& opt, const OnlineConfig& cfg, double step_size,
            const ExecPolicy& pol) {
  const bool binary = data.kind() == DataKind::binary;
  if (binary && state.e_omega.size() != batch.size())
    throw InputError("tilt means are not aligned with this batch; run e_step first");
  const std::size_t d_count = model.order();
  const std::size_t rank = uniform_rank(model);
  const std::size_t r2 = rank * rank;
  const double scale =
      static_cast<double>(data.size()) / static_cast<double>(batch.size());
  const double e_tau = state.e_tau();

  // Per-observation subchains at every mode, then serial accumulation so
  // the gradient does not depend on the thread count.
  std::vector<double> subs(batch.size() * d_count * r2);
  std::vector<double> x(batch.size());
  kernels::parallel_for(batch.size(), pol, [&](std::size_t j) {
    std::vector<double> scratch(3 * d_count * r2);
    all_subchains(model, data.index(batch[j]), rank,
                  subs.data() + j * d_count * r2, x[j], scratch.data());
  });

  std::vector<double> rho(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j)
    rho[j] = scale * residual_factor(data.kind(), data.value(batch[j]), x[j],
                                     e_tau, binary ? state.e_omega[j] : 0.0);

  std::vector<std::vector<double>> grad_cores(d_count), grad_weights(d_count);
  for (std::size_t d = 0; d < d_count; ++d) {
    grad_cores[d].assign(model.cores[d].size(), 0.0);
    grad_weights[d].assign(rank, 0.0);
  }
  kernels::parallel_for(d_count, pol, [&](std::size_t d) {
    const std::vector<double>& lam = model.weights[d];
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const double* u = subs.data() + (j * d_count + d) * r2;
      const std::size_t i = data.index(batch[j])[d];
      const double* g = model.slice(d, i);
      double* gc = grad_cores[d].data() + i * r2;
      for (std::size_t ro = 0; ro < rank; ++ro) {
        double diag = 0.0;
        for (std::size_t k = 0; k < rank; ++k) diag += u[ro * rank + k] * g[k * rank + ro];
        grad_weights[d][ro] += rho[j] * diag;
        const double wu = rho[j] * lam[ro];
        for (std::size_t ri = 0; ri < rank; ++ri)
          gc[ri * rank + ro] += wu * u[ro * rank + ri];
      }
    }
    // Expected-prior pull toward zero, unscaled (it is not a batch term).
    const double* core = model.cores[d].data();
    for (std::size_t k = 0; k < model.cores[d].size(); ++k)
      grad_cores[d][k] -= cfg.psi * core[k];
    const std::vector<double> phi = state.e_phi(d);
    for (std::size_t r = 0; r < rank; ++r)
      grad_weights[d][r] -= phi[r] * lam[r];
  });

  opt.t += 1;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(opt.t));
  auto ascend = [&](std::vector<double>& theta, std::vector<double>& m,
                    std::vector<double>& v, const std::vector<double>& grad) {
    if (!cfg.adaptive) {
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += step_size * grad[k];
      return;
    }
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
      v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
      theta[k] += step_size * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
  };
  kernels::parallel_for(d_count, pol, [&](std::size_t d) {
    ascend(model.cores[d], opt.m_cores[d], opt.v_cores[d], grad_cores[d]);
    ascend(model.weights[d], opt.m_weights[d], opt.v_weights[d], grad_weights[d]);
  });
}

OnlineResult run_online(const SparseTensor& data, const OnlineConfig& cfg,
                        const ExecPolicy& pol,
                        const std::function<void(const OnlineInfo&)>& observer) {
  cfg.validate();
  data.validate();
  const std::size_t n_obs = data.size();
  if (n_obs == 0) throw InputError("cannot fit a tensor with no observed entries");

  Rng rng(cfg.seed);
  OnlineResult res;
  res.model.shape = data.shape();
  res.model.ranks.assign(data.order(), cfg.rank);
  res.model.cores.resize(data.order());
  res.model.weights.resize(data.order());
  res.state.delta_shape.resize(data.order());
  res.state.delta_rate.resize(data.order());
  const double core_sigma = std::sqrt(cfg.init_core_var);
  for (std::size_t d = 0; d < data.order(); ++d) {
    res.model.cores[d].resize(data.shape()[d] * cfg.rank * cfg.rank);
    for (double& v : res.model.cores[d]) v = rng.normal(0.0, core_sigma);
    res.state.delta_shape[d].assign(cfg.rank, cfg.a0);
    res.state.delta_rate[d].assign(cfg.rank, 1.0);
    // Unit starting weights, not draws from the shrinkage prior: gradient
    // ascent cannot recover a bond whose weight starts near zero (the data
    // gradient scales with the weight itself), so shrinkage must find the
    // weak bonds rather than be handed them.
    res.model.weights[d].assign(cfg.rank, 1.0);
  }
  res.state.tau_shape = cfg.alpha0;
  res.state.tau_rate = cfg.beta0;

  OptState opt = OptState::zeros_like(res.model);
  const std::size_t batch = std::min(cfg.batch_size, n_obs);
  const std::size_t per_epoch = (n_obs + batch - 1) / batch;
  const double forget_batch =
      std::pow(cfg.forget, 1.0 / static_cast<double>(per_epoch));

  std::vector<std::size_t> perm(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) perm[i] = i;

  std::size_t iter = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n_obs; i-- > 1;) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[j]);
    }
    const double step_e = cfg.step * std::pow(cfg.step_decay, static_cast<double>(epoch));
    for (std::size_t lo = 0; lo < n_obs; lo += batch) {
      const std::size_t hi = std::min(lo + batch, n_obs);
      const std::span<const std::size_t> ids(perm.data() + lo, hi - lo);
      e_step(res.model, data, ids, res.state, cfg, forget_batch, pol);
      const double fe = free_energy(res.model, data, ids, res.state, cfg, pol);
      m_step(res.model, data, ids, res.state, opt, cfg, step_e, pol);
      iter += 1;
      res.fe_trace.push_back(fe);
      if (observer) observer({iter, epoch, fe, step_e});
    }
  }
  return res;
}

}  // namespace btr
