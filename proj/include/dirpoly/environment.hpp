#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dirpoly/disorder.hpp"

namespace dirpoly {

// Deterministic i.i.d. disorder field eta(t, x) on N x Z^d.  Values are a
// pure function of (seed, model, absolute coordinates): the field is never
// materialized, and time/space shifts are exact because the generator is
// keyed on absolute coordinates (absorb-and-mix of seed, t, x_1..x_d,
// finished by the SplitMix64 finalizer; see rng.hpp).
class EnvironmentField {
 public:
  EnvironmentField(std::uint64_t seed, DisorderModel model, int d);

  int dimension() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  const DisorderModel& model() const { return model_; }

  // eta(offset_n + t, offset_x + x); requires t >= 1.
  double eta(std::int64_t t, std::span<const std::int32_t> x) const;

  // Uniform driving variable of the same site (used by percolation
  // couplings that re-threshold one uniform field at several p).
  double site_uniform(std::int64_t t, std::span<const std::int32_t> x) const;

  // exp(beta * eta(t,x) - lambda(beta)); mean 1 over the disorder.
  double weight(double beta, std::int64_t t,
                std::span<const std::int32_t> x) const;

  // View with offsets composed: shift(F, n, x).eta(t, y) = F.eta(n+t, x+y).
  EnvironmentField shift(std::int64_t n,
                         std::span<const std::int64_t> x) const;

  // Test hook: replace the disorder row at absolute time t_abs by a fresh
  // draw keyed on alt_seed (conditional-resampling checks).
  EnvironmentField with_row_override(std::int64_t t_abs,
                                     std::uint64_t alt_seed) const;

  std::int64_t offset_n() const { return offset_n_; }
  std::span<const std::int64_t> offset_x() const { return offset_x_; }

 private:
  std::uint64_t seed_;
  DisorderModel model_;
  int d_;
  std::int64_t offset_n_ = 0;
  std::vector<std::int64_t> offset_x_;
  std::optional<std::pair<std::int64_t, std::uint64_t>> row_override_;
};

}  // namespace dirpoly
