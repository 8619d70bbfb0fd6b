#include "dirpoly/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "dirpoly/detail/merge.hpp"
#include "dirpoly/errors.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

using detail::merge_range;

namespace {

struct RealGather {
  const double* prev_w = nullptr;
  const EnvironmentField* field = nullptr;
  const SitePacking* pk = nullptr;
  double beta = 0.0;
  std::int64_t t = 0;
  double inv2d = 0.0;
  std::vector<std::uint64_t>* out_keys = nullptr;
  std::vector<double>* out_w = nullptr;
  double local_max = 0.0;
  double acc = 0.0;
  std::array<std::int32_t, 6> coords{};

  void begin_site() { acc = 0.0; }
  void absorb(std::size_t i) { acc += prev_w[i]; }
  void emit(std::uint64_t y) {
    pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
    const double a =
        beta * field->eta(t, {coords.data(), static_cast<std::size_t>(pk->d)});
    const double v = std::exp(a) * (acc * inv2d);
    out_keys->push_back(y);
    out_w->push_back(v);
    if (v > local_max) local_max = v;
  }
};

struct ComplexGather {
  const std::complex<double>* prev_w = nullptr;
  const EnvironmentField* field = nullptr;
  const SitePacking* pk = nullptr;
  std::complex<double> beta{0.0, 0.0};
  std::int64_t t = 0;
  double inv2d = 0.0;
  std::vector<std::uint64_t>* out_keys = nullptr;
  std::vector<std::complex<double>>* out_w = nullptr;
  double local_max = 0.0;
  std::complex<double> acc{0.0, 0.0};
  std::array<std::int32_t, 6> coords{};

  void begin_site() { acc = {0.0, 0.0}; }
  void absorb(std::size_t i) { acc += prev_w[i]; }
  void emit(std::uint64_t y) {
    pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
    const double eta =
        field->eta(t, {coords.data(), static_cast<std::size_t>(pk->d)});
    const std::complex<double> v = std::exp(beta * eta) * (acc * inv2d);
    out_keys->push_back(y);
    out_w->push_back(v);
    local_max = std::max(local_max, std::abs(v));
  }
};

struct DerivGather {
  const double* prev_w = nullptr;
  const double* prev_e = nullptr;
  const EnvironmentField* field = nullptr;
  const SitePacking* pk = nullptr;
  double beta = 0.0;
  std::int64_t t = 0;
  double inv2d = 0.0;
  std::vector<std::uint64_t>* out_keys = nullptr;
  std::vector<double>* out_w = nullptr;
  std::vector<double>* out_e = nullptr;
  double local_max = 0.0;
  double accw = 0.0;
  double acce = 0.0;
  std::array<std::int32_t, 6> coords{};

  void begin_site() { accw = acce = 0.0; }
  void absorb(std::size_t i) {
    accw += prev_w[i];
    acce += prev_e[i];
  }
  void emit(std::uint64_t y) {
    pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
    const double eta =
        field->eta(t, {coords.data(), static_cast<std::size_t>(pk->d)});
    const double k = std::exp(beta * eta) * inv2d;
    const double v = k * accw;
    out_keys->push_back(y);
    out_w->push_back(v);
    out_e->push_back(k * (acce + eta * accw));
    if (v > local_max) local_max = v;
  }
};

void check_advance_guards(const PartitionSlice& prev) {
  const SitePacking pk(prev.d);
  if (prev.n + 1 >= pk.coord_limit())
    throw Error(ErrorCode::TooLarge, "advance: horizon exceeds packing range");
  if (prev.size() * 2 * prev.d > 2 * kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "advance: slice exceeds site guard");
}

// Renormalize so max weight is 1, fold ln(max) into logscale, and drop
// entries below floor * max.  Magnitude functor differs per value type.
template <typename V, class Abs>
void renorm_and_prune(Slice<V>& s, double maxval, const AdvanceOptions& opt,
                      Abs absf) {
  if (s.keys.empty()) return;
  if (!std::isfinite(maxval) || maxval <= 0.0)
    throw Error(ErrorCode::NumericRange,
                "advance: slice renormalization hit a non-finite weight");
  if (opt.renormalize) {
    const double inv = 1.0 / maxval;
    for (auto& v : s.w) v = v * inv;
    s.logscale += std::log(maxval);
  }
  if (opt.prune_floor > 0.0) {
    const double floor_abs =
        opt.prune_floor * (opt.renormalize ? 1.0 : maxval);
    std::size_t out = 0;
    for (std::size_t i = 0; i < s.keys.size(); ++i) {
      if (absf(s.w[i]) >= floor_abs) {
        s.keys[out] = s.keys[i];
        s.w[out] = s.w[i];
        ++out;
      }
    }
    s.keys.resize(out);
    s.w.resize(out);
  }
}

int pick_chunks(std::size_t n, bool allow_parallel) {
  if (!allow_parallel) return 1;
#ifdef _OPENMP
  if (omp_in_parallel()) return 1;
#endif
  // Fixed work-based chunking: results do not depend on the thread count.
  const std::size_t grain = 8192;
  if (n < 2 * grain) return 1;
  return static_cast<int>(std::min<std::size_t>(64, n / grain));
}

}  // namespace

PartitionSlice make_initial_slice(int d) {
  const SitePacking pk(d);
  PartitionSlice s;
  s.d = d;
  s.keys = {pk.origin()};
  s.w = {1.0};
  return s;
}

PartitionSlice advance_reference(const PartitionSlice& prev,
                                 const EnvironmentField& field, double beta,
                                 const AdvanceOptions& opt) {
  check_advance_guards(prev);
  const SitePacking pk(prev.d);
  const auto deltas = pk.neighbor_deltas();

  PartitionSlice out;
  out.n = prev.n + 1;
  out.d = prev.d;
  out.logscale = prev.logscale;
  out.keys.reserve(prev.size() + prev.size() / 2 + 2 * prev.d + 8);
  out.w.reserve(out.keys.capacity());

  RealGather pol;
  pol.prev_w = prev.w.data();
  pol.field = &field;
  pol.pk = &pk;
  pol.beta = beta;
  pol.t = prev.n + 1;
  pol.inv2d = 1.0 / (2.0 * prev.d);
  pol.out_keys = &out.keys;
  pol.out_w = &out.w;
  merge_range(prev.keys, deltas, false, 0, false, 0, pol);

  if (out.size() > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "advance: slice exceeds site guard");
  renorm_and_prune(out, pol.local_max, opt,
                   [](double v) { return std::fabs(v); });
  return out;
}

PartitionSlice advance(const PartitionSlice& prev,
                       const EnvironmentField& field, double beta,
                       const AdvanceOptions& opt) {
  const int chunks = pick_chunks(prev.size(), opt.allow_parallel);
  if (chunks <= 1) return advance_reference(prev, field, beta, opt);

  check_advance_guards(prev);
  const SitePacking pk(prev.d);
  const auto deltas = pk.neighbor_deltas();
  const std::size_t stride = prev.size() / chunks;

  std::vector<std::vector<std::uint64_t>> ckeys(chunks);
  std::vector<std::vector<double>> cw(chunks);
  std::vector<double> cmax(chunks, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < chunks; ++c) {
    RealGather pol;
    pol.prev_w = prev.w.data();
    pol.field = &field;
    pol.pk = &pk;
    pol.beta = beta;
    pol.t = prev.n + 1;
    pol.inv2d = 1.0 / (2.0 * prev.d);
    ckeys[c].reserve(stride + stride / 2 + 16);
    cw[c].reserve(ckeys[c].capacity());
    pol.out_keys = &ckeys[c];
    pol.out_w = &cw[c];
    const bool has_begin = c > 0;
    const bool has_end = c + 1 < chunks;
    const std::uint64_t b = has_begin ? prev.keys[c * stride] : 0;
    const std::uint64_t e = has_end ? prev.keys[(c + 1) * stride] : 0;
    merge_range(prev.keys, deltas, has_begin, b, has_end, e, pol);
    cmax[c] = pol.local_max;
  }

  PartitionSlice out;
  out.n = prev.n + 1;
  out.d = prev.d;
  out.logscale = prev.logscale;
  std::size_t total = 0;
  for (int c = 0; c < chunks; ++c) total += ckeys[c].size();
  if (total > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "advance: slice exceeds site guard");
  out.keys.resize(total);
  out.w.resize(total);
  std::size_t at = 0;
  double maxval = 0.0;
  for (int c = 0; c < chunks; ++c) {
    std::memcpy(out.keys.data() + at, ckeys[c].data(),
                ckeys[c].size() * sizeof(std::uint64_t));
    std::memcpy(out.w.data() + at, cw[c].data(), cw[c].size() * sizeof(double));
    at += ckeys[c].size();
    maxval = std::max(maxval, cmax[c]);
  }
  renorm_and_prune(out, maxval, opt, [](double v) { return std::fabs(v); });
  return out;
}

double log_normalized_mass(const PartitionSlice& slice,
                           const DisorderModel& model, double beta) {
  const double mass = pairwise_sum(slice.w);
  return std::log(mass) + slice.logscale - slice.n * log_mgf(model, beta);
}

double normalized_mass(const PartitionSlice& slice, const DisorderModel& model,
                       double beta) {
  return std::exp(log_normalized_mass(slice, model, beta));
}

PartitionSlice endpoint_marginal(const PartitionSlice& slice) {
  PartitionSlice out;
  out.n = slice.n;
  out.d = slice.d;
  out.keys = slice.keys;
  out.w.resize(slice.size());
  const double mass = pairwise_sum(slice.w);
  for (std::size_t i = 0; i < slice.size(); ++i) out.w[i] = slice.w[i] / mass;
  return out;
}

double endpoint_second_moment(const PartitionSlice& slice) {
  const SitePacking pk(slice.d);
  std::array<std::int32_t, 6> c{};
  std::vector<double> terms(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    pk.unpack(slice.keys[i], {c.data(), static_cast<std::size_t>(slice.d)});
    double r2 = 0.0;
    for (int k = 0; k < slice.d; ++k)
      r2 += static_cast<double>(c[k]) * static_cast<double>(c[k]);
    terms[i] = slice.w[i] * r2;
  }
  return pairwise_sum(terms) / pairwise_sum(slice.w);
}

double overlap_next(const PartitionSlice& slice_nm1) {
  const PartitionSlice rho = endpoint_marginal(slice_nm1);
  const RealSlice q = srw_step(rho);
  std::vector<double> sq(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) sq[i] = q.w[i] * q.w[i];
  return pairwise_sum(sq);
}

ComplexPartitionSlice make_initial_complex_slice(int d,
                                                 std::complex<double> beta) {
  const SitePacking pk(d);
  ComplexPartitionSlice s;
  s.d = d;
  s.beta = beta;
  s.keys = {pk.origin()};
  s.w = {{1.0, 0.0}};
  return s;
}

ComplexPartitionSlice advance_complex(const ComplexPartitionSlice& prev,
                                      const EnvironmentField& field,
                                      std::complex<double> beta,
                                      const AdvanceOptions& opt) {
  if (!u0_path_check(field.model(), beta))
    throw Error(ErrorCode::OutsideU0,
                "advance_complex: straight-path branch test failed");
  check_advance_guards(prev);
  const SitePacking pk(prev.d);
  const auto deltas = pk.neighbor_deltas();

  ComplexPartitionSlice out;
  out.n = prev.n + 1;
  out.d = prev.d;
  out.beta = beta;
  out.logscale = prev.logscale;
  out.keys.reserve(prev.size() + prev.size() / 2 + 2 * prev.d + 8);
  out.w.reserve(out.keys.capacity());

  ComplexGather pol;
  pol.prev_w = prev.w.data();
  pol.field = &field;
  pol.pk = &pk;
  pol.beta = beta;
  pol.t = prev.n + 1;
  pol.inv2d = 1.0 / (2.0 * prev.d);
  pol.out_keys = &out.keys;
  pol.out_w = &out.w;
  merge_range(prev.keys, deltas, false, 0, false, 0, pol);

  if (out.size() > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "advance_complex: slice exceeds guard");
  renorm_and_prune(out, pol.local_max, opt,
                   [](const std::complex<double>& v) { return std::abs(v); });
  return out;
}

std::complex<double> log_normalized_mass_complex(
    const ComplexPartitionSlice& slice, const DisorderModel& model) {
  std::vector<double> re(slice.size()), im(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    re[i] = slice.w[i].real();
    im[i] = slice.w[i].imag();
  }
  const std::complex<double> mass{pairwise_sum(re), pairwise_sum(im)};
  return std::log(mass) + slice.logscale -
         static_cast<double>(slice.n) * log_mgf_complex(model, slice.beta);
}

DerivativeSlice make_initial_derivative_slice(int d) {
  DerivativeSlice s;
  s.z = make_initial_slice(d);
  s.e = {0.0};
  return s;
}

DerivativeSlice advance_with_derivative(const DerivativeSlice& prev,
                                        const EnvironmentField& field,
                                        double beta,
                                        const AdvanceOptions& opt) {
  check_advance_guards(prev.z);
  const SitePacking pk(prev.z.d);
  const auto deltas = pk.neighbor_deltas();

  DerivativeSlice out;
  out.z.n = prev.z.n + 1;
  out.z.d = prev.z.d;
  out.z.logscale = prev.z.logscale;
  out.z.keys.reserve(prev.z.size() + prev.z.size() / 2 + 8);
  out.z.w.reserve(out.z.keys.capacity());
  out.e.reserve(out.z.keys.capacity());

  DerivGather pol;
  pol.prev_w = prev.z.w.data();
  pol.prev_e = prev.e.data();
  pol.field = &field;
  pol.pk = &pk;
  pol.beta = beta;
  pol.t = prev.z.n + 1;
  pol.inv2d = 1.0 / (2.0 * prev.z.d);
  pol.out_keys = &out.z.keys;
  pol.out_w = &out.z.w;
  pol.out_e = &out.e;
  merge_range(prev.z.keys, deltas, false, 0, false, 0, pol);

  if (out.z.size() > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "advance_with_derivative: slice guard");
  // Shared renormalization: divide both components by the max Z weight.
  if (!std::isfinite(pol.local_max) || pol.local_max <= 0.0)
    throw Error(ErrorCode::NumericRange,
                "advance_with_derivative: non-finite weight");
  if (opt.renormalize) {
    const double inv = 1.0 / pol.local_max;
    for (auto& v : out.z.w) v *= inv;
    for (auto& v : out.e) v *= inv;
    out.z.logscale += std::log(pol.local_max);
  }
  if (opt.prune_floor > 0.0) {
    const double floor_abs =
        opt.prune_floor * (opt.renormalize ? 1.0 : pol.local_max);
    std::size_t at = 0;
    for (std::size_t i = 0; i < out.z.size(); ++i) {
      if (out.z.w[i] >= floor_abs) {
        out.z.keys[at] = out.z.keys[i];
        out.z.w[at] = out.z.w[i];
        out.e[at] = out.e[i];
        ++at;
      }
    }
    out.z.keys.resize(at);
    out.z.w.resize(at);
    out.e.resize(at);
  }
  return out;
}

double path_mean_energy(const DerivativeSlice& slice) {
  return pairwise_sum(slice.e) / pairwise_sum(slice.z.w);
}

double log_partition_derivative(const EnvironmentField& field, double beta,
                                int n, DerivativeMethod method,
                                const DerivativeOptions& opt) {
  const DisorderModel& model = field.model();
  const int d = field.dimension();
  switch (method) {
    case DerivativeMethod::DerivativeDp: {
      DerivativeSlice s = make_initial_derivative_slice(d);
      for (int t = 0; t < n; ++t)
        s = advance_with_derivative(s, field, beta, opt.advance);
      return path_mean_energy(s) - n * log_mgf_deriv(model, beta, 1);
    }
    case DerivativeMethod::FiniteDifference: {
      const double h = opt.fd_step_scale * std::max(1.0, std::fabs(beta));
      const auto lnw = [&](double b) {
        PartitionSlice s = make_initial_slice(d);
        for (int t = 0; t < n; ++t) s = advance(s, field, b, opt.advance);
        return log_normalized_mass(s, model, b);
      };
      return (lnw(beta + h) - lnw(beta - h)) / (2.0 * h);
    }
    case DerivativeMethod::CauchyCircle: {
      if (!(opt.pi_d > 0.0 && opt.pi_d < 1.0))
        throw Error(ErrorCode::ConfigInvalid,
                    "cauchy_circle requires pi_d in (0,1)");
      const double rho = opt.radius;
      const int K = opt.nodes;
      const double target = -std::log(opt.pi_d);
      // U_2 predicate on the circle (and center): the disk must stay in
      // the L2 region of the complexified condition.
      for (int k = 0; k <= K; ++k) {
        const double th = 2.0 * std::numbers::pi * k / K;
        const std::complex<double> z =
            beta + rho * std::complex<double>(std::cos(th), std::sin(th));
        const double gap = log_mgf(model, 2.0 * z.real()) -
                           2.0 * log_mgf_complex(model, z).real();
        if (!(gap < target))
          throw Error(ErrorCode::OutsideU2,
                      "cauchy_circle: disk leaves the L2 region");
      }
      std::vector<std::complex<double>> lnw(K);
#ifdef _OPENMP
      const bool par = !omp_in_parallel();
#else
      const bool par = false;
#endif
#pragma omp parallel for schedule(dynamic) if (par)
      for (int k = 0; k < K; ++k) {
        const double th = 2.0 * std::numbers::pi * k / K;
        const std::complex<double> z =
            beta + rho * std::complex<double>(std::cos(th), std::sin(th));
        ComplexPartitionSlice s = make_initial_complex_slice(d, z);
        AdvanceOptions copt = opt.advance;
        copt.allow_parallel = false;
        for (int t = 0; t < n; ++t) s = advance_complex(s, field, z, copt);
        lnw[k] = log_normalized_mass_complex(s, model);
      }
      double m = lnw[0].real();
      for (int k = 1; k < K; ++k) m = std::max(m, lnw[k].real());
      std::complex<double> acc{0.0, 0.0};
      for (int k = 0; k < K; ++k) {
        const double th = 2.0 * std::numbers::pi * k / K;
        acc += std::exp(lnw[k] - m) *
               std::complex<double>(std::cos(th), -std::sin(th));
      }
      // W'(beta) = (1/K rho) sum_k W(z_k) e^{-i theta_k};  (ln W)' = W'/W.
      PartitionSlice s = make_initial_slice(d);
      for (int t = 0; t < n; ++t) s = advance(s, field, beta, opt.advance);
      const double lnw_beta = log_normalized_mass(s, model, beta);
      const std::complex<double> deriv =
          acc / (static_cast<double>(K) * rho) * std::exp(m - lnw_beta);
      return deriv.real();
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown derivative method");
}

namespace {

// Sites with |x|_1 <= radius and |x|_1 = parity (mod 2), in key order,
// all carrying the given value.
PartitionSlice ball_slice(int d, int radius, int parity, double value) {
  const SitePacking pk(d);
  PartitionSlice s;
  s.d = d;
  std::array<std::int32_t, 6> x{};
  // Lexicographic odometer over the L1 ball; lexicographic coordinate
  // order equals packed key order.
  std::vector<std::int32_t> c(d, 0);
  const std::function<void(int, int)> rec = [&](int axis, int budget) {
    if (axis == d - 1) {
      for (int v = -budget; v <= budget; ++v) {
        if (((std::abs(v) + radius - budget) & 1) != (parity & 1)) continue;
        c[axis] = v;
        for (int i = 0; i < d; ++i) x[i] = c[i];
        s.keys.push_back(pk.pack({x.data(), static_cast<std::size_t>(d)}));
        s.w.push_back(value);
      }
      return;
    }
    for (int v = -budget; v <= budget; ++v) {
      c[axis] = v;
      rec(axis + 1, budget - std::abs(v));
    }
  };
  rec(0, radius);
  if (s.size() > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "ball_slice: exceeds site guard");
  return s;
}

void filter_radius(PartitionSlice& s, int radius) {
  const SitePacking pk(s.d);
  std::array<std::int32_t, 6> c{};
  std::size_t at = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    pk.unpack(s.keys[i], {c.data(), static_cast<std::size_t>(s.d)});
    int l1 = 0;
    for (int k = 0; k < s.d; ++k) l1 += std::abs(c[k]);
    if (l1 <= radius) {
      s.keys[at] = s.keys[i];
      s.w[at] = s.w[i];
      ++at;
    }
  }
  s.keys.resize(at);
  s.w.resize(at);
}

// One backward sweep step: weight the current field values by the source
// factor e^{beta eta(row, z) - lambda} and gather uniformly over neighbors.
PartitionSlice backward_step(const PartitionSlice& cur,
                             const EnvironmentField& field, double beta,
                             std::int64_t row_time, int radius_after,
                             const AdvanceOptions& opt) {
  const SitePacking pk(cur.d);
  std::array<std::int32_t, 6> c{};
  const double lam = log_mgf(field.model(), beta);
  PartitionSlice weighted = cur;
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    pk.unpack(weighted.keys[i], {c.data(), static_cast<std::size_t>(cur.d)});
    const double eta =
        field.eta(row_time, {c.data(), static_cast<std::size_t>(cur.d)});
    weighted.w[i] *= std::exp(beta * eta - lam);
  }
  PartitionSlice next = srw_step(weighted);
  next.logscale = cur.logscale;
  filter_radius(next, radius_after);
  if (opt.renormalize && !next.w.empty()) {
    double m = 0.0;
    for (double v : next.w) m = std::max(m, v);
    if (!(m > 0.0) || !std::isfinite(m))
      throw Error(ErrorCode::NumericRange, "backward_step: non-finite weight");
    const double inv = 1.0 / m;
    for (auto& v : next.w) v *= inv;
    next.logscale += std::log(m);
  }
  return next;
}

}  // namespace

PartitionSlice remainder_field(const EnvironmentField& field, double beta,
                               int m, int horizon,
                               const AdvanceOptions& opt) {
  if (horizon < m)
    throw Error(ErrorCode::ConfigInvalid, "remainder_field: horizon < m");
  PartitionSlice v = ball_slice(field.dimension(), horizon, horizon % 2, 1.0);
  v.n = horizon;
  for (int j = horizon - 1; j >= m; --j) {
    v = backward_step(v, field, beta, j + 1, j, opt);
    v.n = j;
  }
  return v;
}

PartitionSlice reversed_field(const EnvironmentField& field, double beta,
                              int n, int depth, int radius,
                              const AdvanceOptions& opt) {
  if (depth >= n)
    throw Error(ErrorCode::ConfigInvalid,
                "reversed_field: depth must be < n (rows n-1..n-depth)");
  PartitionSlice f =
      ball_slice(field.dimension(), radius + depth, (n + depth) % 2, 1.0);
  f.n = depth;
  for (int u = depth; u >= 1; --u) {
    f = backward_step(f, field, beta, n - u, radius + (u - 1), opt);
    f.n = u - 1;
  }
  return f;
}

SinaiReport sinai_factorization_check(const EnvironmentField& field,
                                      double beta, int n, int depth,
                                      const SinaiOptions& opt) {
  const DisorderModel& model = field.model();
  if (!(opt.pi_d > 0.0 && opt.pi_d < 1.0))
    throw Error(ErrorCode::ConfigInvalid, "sinai check requires pi_d");
  const auto l2 = l2_condition(model, beta, opt.pi_d);
  if (!l2.satisfied || l2.margin < opt.margin_threshold)
    throw Error(ErrorCode::OutsideU1,
                "sinai check requires beta inside U_1 with margin");

  const int d = field.dimension();
  PartitionSlice s = make_initial_slice(d);
  double lnw_depth = 0.0;
  for (int t = 1; t <= n; ++t) {
    s = advance(s, field, beta, opt.advance);
    if (t == depth) lnw_depth = log_normalized_mass(s, model, beta);
  }
  const double w_forward = std::exp(lnw_depth);

  const int radius = std::max(
      1, static_cast<int>(opt.endpoint_window * std::sqrt(static_cast<double>(n))));
  const PartitionSlice rev =
      reversed_field(field, beta, n, depth, radius, opt.advance);
  const RealSlice occ = srw_occupation(d, n);
  const double lam = log_mgf(model, beta);

  SinaiReport report;
  report.n = n;
  report.depth = depth;
  const SitePacking pk(d);
  std::array<std::int32_t, 6> c{};
  std::vector<double> abs_res;
  for (std::size_t i = 0; i < rev.size(); ++i) {
    const std::uint64_t key = rev.keys[i];
    const std::size_t si = s.find(key);
    const std::size_t oi = occ.find(key);
    if (si == PartitionSlice::npos || oi == RealSlice::npos) continue;
    pk.unpack(key, {c.data(), static_cast<std::size_t>(d)});
    SinaiRow row;
    row.x.assign(c.begin(), c.begin() + d);
    row.lhs = std::exp(std::log(s.w[si]) + s.logscale - n * lam -
                       std::log(occ.w[oi]));
    row.factor = w_forward * rev.w[i] * std::exp(rev.logscale);
    row.residual = row.lhs - row.factor;
    abs_res.push_back(std::fabs(row.residual));
    report.rows.push_back(std::move(row));
  }
  if (!abs_res.empty())
    report.mean_abs_residual =
        pairwise_sum(abs_res) / static_cast<double>(abs_res.size());
  return report;
}

void dump_slice(const PartitionSlice& slice, double beta, std::uint64_t seed,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::ConfigInvalid, "dump_slice: cannot open " + path);
  nlohmann::json header = {{"n", slice.n},
                           {"d", slice.d},
                           {"logscale", slice.logscale},
                           {"beta", beta},
                           {"seed", seed}};
  out << header.dump() << "\n";
  const SitePacking pk(slice.d);
  std::array<std::int32_t, 6> c{};
  for (std::size_t i = 0; i < slice.size(); ++i) {
    pk.unpack(slice.keys[i], {c.data(), static_cast<std::size_t>(slice.d)});
    out.write(reinterpret_cast<const char*>(c.data()),
              slice.d * sizeof(std::int32_t));
    const double logw = std::log(slice.w[i]);
    out.write(reinterpret_cast<const char*>(&logw), sizeof(double));
  }
}

PartitionSlice load_slice(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::ConfigInvalid, "load_slice: cannot open " + path);
  std::string header_line;
  std::getline(in, header_line);
  const nlohmann::json header = nlohmann::json::parse(header_line);
  PartitionSlice s;
  s.n = header.at("n").get<int>();
  s.d = header.at("d").get<int>();
  s.logscale = header.at("logscale").get<double>();
  const SitePacking pk(s.d);
  std::array<std::int32_t, 6> c{};
  while (true) {
    in.read(reinterpret_cast<char*>(c.data()), s.d * sizeof(std::int32_t));
    if (!in) break;
    double logw = 0.0;
    in.read(reinterpret_cast<char*>(&logw), sizeof(double));
    s.keys.push_back(pk.pack({c.data(), static_cast<std::size_t>(s.d)}));
    s.w.push_back(std::exp(logw));
  }
  return s;
}

}  // namespace dirpoly
