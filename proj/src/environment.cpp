#include "dirpoly/environment.hpp"

#include <cmath>

#include "dirpoly/errors.hpp"
#include "dirpoly/rng.hpp"

namespace dirpoly {

namespace {
constexpr std::int64_t kIndexLimit = std::int64_t{1} << 62;
}

EnvironmentField::EnvironmentField(std::uint64_t seed, DisorderModel model,
                                   int d)
    : seed_(seed), model_(std::move(model)), d_(d), offset_x_(d, 0) {
  if (d < 1 || d > 6)
    throw Error(ErrorCode::ConfigInvalid, "dimension must lie in [1,6]");
  model_.validate();
}

double EnvironmentField::site_uniform(std::int64_t t,
                                      std::span<const std::int32_t> x) const {
  if (t < 1) throw Error(ErrorCode::ConfigInvalid, "eta requires t >= 1");
  const std::int64_t ta = offset_n_ + t;
  std::uint64_t h = seed_;
  if (row_override_ && ta == row_override_->first) h = row_override_->second;
  h = hash_absorb(h, static_cast<std::uint64_t>(ta));
  for (int i = 0; i < d_; ++i)
    h = hash_absorb(h, static_cast<std::uint64_t>(offset_x_[i] + x[i]));
  return uniform_open(mix64(h));
}

double EnvironmentField::eta(std::int64_t t,
                             std::span<const std::int32_t> x) const {
  return quantile(model_, site_uniform(t, x));
}

double EnvironmentField::weight(double beta, std::int64_t t,
                                std::span<const std::int32_t> x) const {
  return std::exp(beta * eta(t, x) - log_mgf(model_, beta));
}

EnvironmentField EnvironmentField::shift(
    std::int64_t n, std::span<const std::int64_t> x) const {
  EnvironmentField out = *this;
  out.offset_n_ += n;
  if (std::llabs(out.offset_n_) >= kIndexLimit)
    throw Error(ErrorCode::IndexOverflow, "shift: time offset exceeds 2^62");
  for (int i = 0; i < d_; ++i) {
    out.offset_x_[i] += x[i];
    if (std::llabs(out.offset_x_[i]) >= kIndexLimit)
      throw Error(ErrorCode::IndexOverflow, "shift: space offset exceeds 2^62");
  }
  return out;
}

EnvironmentField EnvironmentField::with_row_override(
    std::int64_t t_abs, std::uint64_t alt_seed) const {
  EnvironmentField out = *this;
  out.row_override_ = {t_abs, alt_seed};
  return out;
}

}  // namespace dirpoly
