#pragma once

// Separable DD pulse-shaping filters, matched receive filter, sampled
// effective channel and receiver noise covariance.

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "zakcra/channel.hpp"
#include "zakcra/dd_core.hpp"
#include "zakcra/slot_layout.hpp"

namespace zakcra {

enum class FilterKind { Sinc, Gaussian };

struct FilterSpec {
  static constexpr double kDefaultAlpha = 1.584;

  FilterKind kind = FilterKind::Sinc;
  double alpha_tau = kDefaultAlpha;
  double alpha_nu = kDefaultAlpha;

  static FilterSpec sinc() { return {FilterKind::Sinc, kDefaultAlpha, kDefaultAlpha}; }
  static FilterSpec gaussian(double a_tau = kDefaultAlpha, double a_nu = kDefaultAlpha) {
    FilterSpec f{FilterKind::Gaussian, a_tau, a_nu};
    f.validate();
    return f;
  }
  void validate() const {
    if (kind == FilterKind::Gaussian && !(alpha_tau > 0.0 && alpha_nu > 0.0))
      throw std::invalid_argument("FilterSpec: Gaussian concentrations must be positive");
  }
  const char* name() const { return kind == FilterKind::Sinc ? "sinc" : "gauss"; }
};

/// sin(πx)/(πx), exact at integers.
inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  if (x == std::round(x)) return 0.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

namespace detail {

/// One 1-D filter factor with scale `width` (B for delay, T for Doppler).
inline double filter_1d(FilterKind kind, double alpha, double width, double x) {
  if (kind == FilterKind::Sinc) return std::sqrt(width) * sinc(width * x);
  const double a = alpha * width * width;
  return std::pow(2.0 * a / std::numbers::pi, 0.25) * std::exp(-a * x * x);
}

}  // namespace detail

/// ∫ w(u) w(u + d) e^{j2π f u} du for one unit-energy 1-D factor. Both
/// filter families have elementary closed forms here: the Gaussian by
/// completing the square, the sinc by Parseval over its rectangular
/// spectrum.
inline cd cross_correlation_1d(FilterKind kind, double alpha, double width, double d, double f) {
  const cd twist = std::polar(1.0, -std::numbers::pi * f * d);
  if (kind == FilterKind::Sinc) {
    const double af = std::abs(f);
    if (af >= width) return {};
    return twist * ((1.0 - af / width) * sinc((width - af) * d));
  }
  const double a = alpha * width * width;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return twist * std::exp(-a * d * d / 2.0 - pi2 * f * f / (2.0 * a));
}

inline cd tx_filter_value(const FilterSpec& spec, const DDGridParams& grid, double tau, double nu) {
  return detail::filter_1d(spec.kind, spec.alpha_tau, grid.bandwidth(), tau) *
         detail::filter_1d(spec.kind, spec.alpha_nu, grid.duration(), nu);
}

/// w_rx(τ,ν) = e^{j2πντ} conj(w_tx(-τ,-ν)).
inline cd matched_rx_filter_value(const FilterSpec& spec, const DDGridParams& grid, double tau, double nu) {
  return std::polar(1.0, kTwoPi * nu * tau) * std::conj(tx_filter_value(spec, grid, -tau, -nu));
}

/// Continuous w_rx *σ (single path) *σ w_tx evaluated at (τ, ν).
inline cd effective_channel_value(const FilterSpec& spec, const DDGridParams& grid, const Path& p,
                                  double tau, double nu) {
  const cd a = cross_correlation_1d(spec.kind, spec.alpha_tau, grid.bandwidth(), tau - p.delay, p.doppler);
  if (a == cd{}) return {};
  const cd d = cross_correlation_1d(spec.kind, spec.alpha_nu, grid.duration(), nu - p.doppler, -tau);
  return p.gain * std::polar(1.0, kTwoPi * p.doppler * (tau - p.delay)) * a * d;
}

struct EffectiveChannel {
  static constexpr double kTruncation = 1e-4;
  static constexpr int kWindow = 8;

  DDTapSet taps;
  PathSet source_paths;
  FilterSpec filter;
};

/// Samples the effective channel on the lattice over a window of kWindow
/// cells around the physical support, dropping taps below kTruncation of
/// the peak.
inline EffectiveChannel effective_channel_taps(const FilterSpec& spec, const PathSet& paths,
                                               const DDGridParams& grid,
                                               double truncation = EffectiveChannel::kTruncation,
                                               int window = EffectiveChannel::kWindow) {
  spec.validate();
  for (std::size_t i = 0; i < paths.paths.size(); ++i) {
    const Path& p = paths.paths[i];
    if (!(p.delay >= 0.0) || p.delay >= grid.tau_p) {
      std::ostringstream os;
      os << "crystalline violation: path " << i << " delay " << p.delay << " s is outside [0, tau_p = "
         << grid.tau_p << " s)";
      throw std::invalid_argument(os.str());
    }
  }
  if (paths.doppler_spread() >= grid.nu_p) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < paths.paths.size(); ++i)
      if (std::abs(paths.paths[i].doppler) > std::abs(paths.paths[worst].doppler)) worst = i;
    std::ostringstream os;
    os << "crystalline violation: Doppler spread " << paths.doppler_spread() << " Hz >= nu_p = " << grid.nu_p
       << " Hz (path " << worst << " at " << paths.paths[worst].doppler << " Hz)";
    throw std::invalid_argument(os.str());
  }

  const double B = grid.bandwidth();
  const double T = grid.duration();
  double kmin = 0.0, kmax = 0.0, lmin = 0.0, lmax = 0.0;
  bool first = true;
  for (const Path& p : paths.paths) {
    const double kb = p.delay * B;
    const double lb = p.doppler * T;
    if (first) {
      kmin = kmax = kb;
      lmin = lmax = lb;
      first = false;
    }
    kmin = std::min(kmin, kb);
    kmax = std::max(kmax, kb);
    lmin = std::min(lmin, lb);
    lmax = std::max(lmax, lb);
  }
  const int k_lo = static_cast<int>(std::floor(kmin)) - window;
  const int k_hi = static_cast<int>(std::ceil(kmax)) + window;
  const int l_lo = static_cast<int>(std::floor(lmin)) - window;
  const int l_hi = static_cast<int>(std::ceil(lmax)) + window;

  std::vector<Tap> taps;
  taps.reserve(static_cast<std::size_t>(k_hi - k_lo + 1) * (l_hi - l_lo + 1));
  for (int k = k_lo; k <= k_hi; ++k) {
    const double tau = k / B;
    for (int l = l_lo; l <= l_hi; ++l) {
      const double nu = l / T;
      cd v{};
      for (const Path& p : paths.paths) v += effective_channel_value(spec, grid, p, tau, nu);
      if (v != cd{}) taps.push_back({k, l, v});
    }
  }
  return {DDTapSet::from_taps(grid.M, grid.N, std::move(taps), truncation), paths, spec};
}

/// E[n[k1,l1] conj(n[k2,l2])] of the matched-filtered, sampled quasi-periodic
/// noise, in units of N0. Sums lattice images of the fundamental cell.
inline cd noise_covariance_entry(const FilterSpec& spec, const DDGridParams& grid, int k1, int l1, int k2,
                                 int l2) {
  const int M = grid.M;
  const int N = grid.N;
  const long long MN = grid.MN();
  const double B = grid.bandwidth();
  const double T = grid.duration();
  const int n_img = 1 + 10 / M;
  const int m_img = 1 + 10 / N;
  cd acc{};
  for (int n = -n_img; n <= n_img; ++n) {
    const double dtau = static_cast<double>(k1 - k2 - n * M) / B;
    for (int m = -m_img; m <= m_img; ++m) {
      const long long dl = static_cast<long long>(l1) - l2 - static_cast<long long>(m) * N;
      const double dnu = static_cast<double>(dl) / T;
      const cd j1 = cross_correlation_1d(spec.kind, spec.alpha_tau, B, -dtau, -dnu);
      if (j1 == cd{}) continue;
      const cd j2 = cross_correlation_1d(spec.kind, spec.alpha_nu, T, -dnu, 0.0);
      if (j2 == cd{}) continue;
      const long long num = static_cast<long long>(n) * l1 * M + dl * (static_cast<long long>(k1) - n * M);
      acc += unit_phase(num, MN) * j1 * j2;
    }
  }
  return acc;
}

/// Noise covariance over the data tile, vectorized row-major over
/// (delay - M_tile, Doppler).
inline CMatrix noise_covariance(const FilterSpec& spec, const DDGridParams& grid, const SlotLayout& tile,
                                double N0 = 1.0) {
  const int D = tile.data_symbols();
  CMatrix R(D, D);
  for (int k1 = tile.M_tile; k1 < 2 * tile.M_tile; ++k1)
    for (int l1 = 0; l1 < tile.N_tile; ++l1)
      for (int k2 = tile.M_tile; k2 < 2 * tile.M_tile; ++k2)
        for (int l2 = 0; l2 < tile.N_tile; ++l2)
          R(tile.data_index(k1, l1), tile.data_index(k2, l2)) =
              N0 * noise_covariance_entry(spec, grid, k1, l1, k2, l2);
  return R;
}

/// Covariance over the whole slot grid, row-major over (delay, Doppler).
inline CMatrix slot_noise_covariance(const FilterSpec& spec, const DDGridParams& grid, double N0 = 1.0) {
  const int S = grid.M * grid.N;
  CMatrix R(S, S);
  for (int k1 = 0; k1 < grid.M; ++k1)
    for (int l1 = 0; l1 < grid.N; ++l1)
      for (int k2 = 0; k2 < grid.M; ++k2)
        for (int l2 = 0; l2 < grid.N; ++l2)
          R(k1 * grid.N + l1, k2 * grid.N + l2) = N0 * noise_covariance_entry(spec, grid, k1, l1, k2, l2);
  return R;
}

}  // namespace zakcra
