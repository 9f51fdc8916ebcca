#include "btr/mgp.hpp"

#include "btr/common.hpp"

namespace btr {

MgpState MgpState::prior_mean(const std::vector<std::size_t>& ranks, double a0) {
  MgpState s;
  s.delta.resize(ranks.size());
  for (std::size_t d = 0; d < ranks.size(); ++d) s.delta[d].assign(ranks[d], a0);
  return s;
}

std::vector<double> MgpState::phi(std::size_t d) const {
  std::vector<double> out(delta[d].size());
  double p = 1.0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    p *= delta[d][r];
    out[r] = p;
  }
  return out;
}

GammaParams delta_conditional(double a0, const std::vector<double>& lambda,
                              const std::vector<double>& delta, std::size_t r) {
  const std::size_t rank = lambda.size();
  if (delta.size() != rank) throw InputError("lambda and delta lengths disagree");
  if (r >= rank) throw InputError("bond index out of range");
  double partial = 1.0;
  for (std::size_t l = 0; l < r; ++l) partial *= delta[l];
  double acc = 0.0;
  for (std::size_t h = r; h < rank; ++h) {
    if (h > r) partial *= delta[h];
    acc += lambda[h] * lambda[h] * partial;
  }
  return {a0 + 0.5 * static_cast<double>(rank - r), 1.0 + 0.5 * acc};
}

void sample_delta(MgpState& mgp, const std::vector<std::vector<double>>& weights,
                  double a0, Rng& rng) {
  for (std::size_t d = 0; d < mgp.delta.size(); ++d)
    for (std::size_t r = 0; r < mgp.delta[d].size(); ++r) {
      const GammaParams g = delta_conditional(a0, weights[d], mgp.delta[d], r);
      mgp.delta[d][r] = rng.gamma(g.shape, g.rate);
    }
}

}  // namespace btr
