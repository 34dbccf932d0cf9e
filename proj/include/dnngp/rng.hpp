/*!
 * This file is part of dnngp, a C++ library for scalable Bayesian
 * spatio-temporal regression with dynamic nearest-neighbor Gaussian
 * processes.
 *
 * Copyright (c) 2026 dnngp contributors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in
 * the project root for license information.
 */
#ifndef DNNGP_RNG_HPP_
#define DNNGP_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace dnngp {

/*! Deterministic random number source.
 *
 * All variate transforms are implemented here rather than through
 * std::<distribution> so that a (seed, stream) pair reproduces the same
 * draw sequence on every standard library. Streams derived from the same
 * seed are decorrelated by a splitmix64 hash of the stream id.
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix_(seed + 0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  /*! Uniform draw on [0, 1). */
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /*! Uniform draw on (0, 1]; safe as a log() argument. */
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /*! Standard normal via Box-Muller, one spare draw cached. */
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /*! Gamma(shape, rate 1) by the Marsaglia-Tsang squeeze. */
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /*! Inverse-gamma draw with shape a and scale b (mean b/(a-1) for a>1). */
  double inverse_gamma(double shape, double scale) {
    return scale / gamma(shape);
  }

  std::uint64_t raw() { return gen_(); }

private:
  static std::uint64_t mix_(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dnngp

#endif  // DNNGP_RNG_HPP_
