#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace btr {

/// Seeded random generator with the distributions the samplers need.
///
/// All distributions are implemented on top of a single uniform source so
/// that a given seed produces the same stream on every platform; the
/// standard library's distribution objects are implementation-defined and
/// would break cross-build reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Generator for a keyed substream, derived from the original seed (not
  /// the current state). Streams for distinct (a, b) pairs are independent
  /// of how much the parent has been consumed, which keeps per-entry draws
  /// stable under checkpoint resume and any thread count.
  Rng substream(std::uint64_t a, std::uint64_t b) const;

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, rate) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape, double rate);

  /// Exponential with unit rate.
  double exponential();

  bool bernoulli(double p) { return uniform() < p; }

  /// Serialize/restore the full generator state (engine plus seed).
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace btr
