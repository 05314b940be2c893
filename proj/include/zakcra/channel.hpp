#pragma once

// Doubly-spread channel realizations (Veh-A power-delay profile with
// cosine-angle Doppler).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "zakcra/dd_core.hpp"
#include "zakcra/rng.hpp"

namespace zakcra {

struct Path {
  cd gain;
  double delay = 0.0;    // s
  double doppler = 0.0;  // Hz
};

struct PathSet {
  std::vector<Path> paths;

  double max_delay() const {
    double m = 0.0;
    for (const Path& p : paths) m = std::max(m, p.delay);
    return m;
  }
  double doppler_spread() const {
    if (paths.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(paths.begin(), paths.end(),
                                        [](const Path& a, const Path& b) { return a.doppler < b.doppler; });
    return hi->doppler - lo->doppler;
  }
  double total_power() const {
    double e = 0.0;
    for (const Path& p : paths) e += std::norm(p.gain);
    return e;
  }

  static PathSet single(cd gain = 1.0, double delay = 0.0, double doppler = 0.0) {
    return PathSet{{Path{gain, delay, doppler}}};
  }
};

namespace veh_a {

inline constexpr std::array<double, 6> kDelaysUs{0.0, 0.31, 0.71, 1.09, 1.73, 2.51};
inline constexpr std::array<double, 6> kRelPowerDb{0.0, -1.0, -9.0, -10.0, -15.0, -20.0};
inline constexpr double kMaxDelay = 2.51e-6;

/// Path variances normalized to sum to one.
inline std::array<double, 6> normalized_powers() {
  std::array<double, 6> p{};
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::pow(10.0, kRelPowerDb[i] / 10.0);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace veh_a

/// One Veh-A realization: fixed delays, Rayleigh gains, ν_i = ν_max cos θ_i.
inline PathSet sample_veh_a(Rng& rng, double nu_max) {
  const auto powers = veh_a::normalized_powers();
  PathSet ps;
  ps.paths.reserve(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const cd g = complex_normal(rng, powers[i]);
    const double theta = kTwoPi * uniform01(rng);
    ps.paths.push_back({g, veh_a::kDelaysUs[i] * 1e-6, nu_max * std::cos(theta)});
  }
  return ps;
}

/// Delay spread below the delay period and Doppler spread below the Doppler period.
inline bool crystalline_check(const PathSet& paths, const DDGridParams& grid) {
  return paths.max_delay() < grid.tau_p && paths.doppler_spread() < grid.nu_p;
}

}  // namespace zakcra
