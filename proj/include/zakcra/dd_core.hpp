#pragma once

// Delay-Doppler lattice geometry, quasi-periodic signals and discrete
// twisted-convolution algebra.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace zakcra {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Floor division for possibly negative integers.
constexpr long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr long long pos_mod(long long a, long long b) {
  long long r = a % b;
  return r < 0 ? r + b : r;
}

/// e^{j2π num/den}, with the argument reduced exactly in integers first.
inline cd unit_phase(long long num, long long den) {
  const long long r = pos_mod(num, den);
  return std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(den));
}

/// Geometry of a delay-Doppler lattice with M delay bins and N Doppler bins
/// per period. tau_p * nu_p = 1, so B*T = M*N.
struct DDGridParams {
  int M = 0;
  int N = 0;
  double nu_p = 0.0;   // Hz
  double tau_p = 0.0;  // s

  static DDGridParams make(int M, int N, double nu_p) {
    DDGridParams g{M, N, nu_p, 1.0 / nu_p};
    g.validate();
    return g;
  }

  double bandwidth() const { return M * nu_p; }
  double duration() const { return N * tau_p; }
  double delay_resolution() const { return tau_p / M; }
  double doppler_resolution() const { return nu_p / N; }
  long long MN() const { return static_cast<long long>(M) * N; }

  void validate() const {
    if (M <= 0 || N <= 0) throw std::invalid_argument("DDGridParams: M and N must be positive");
    if (!(nu_p > 0.0) || !(tau_p > 0.0)) throw std::invalid_argument("DDGridParams: periods must be positive");
    if (std::abs(tau_p * nu_p - 1.0) > 1e-12)
      throw std::invalid_argument("DDGridParams: tau_p * nu_p must equal 1");
  }

  bool same_lattice(const DDGridParams& o) const {
    return M == o.M && N == o.N && std::abs(nu_p - o.nu_p) <= 1e-12 * std::max(nu_p, o.nu_p);
  }
};

/// Fundamental M x N grid of a quasi-periodic DD signal. Rows index delay,
/// columns index Doppler.
struct QuasiPeriodicSignal {
  CMatrix grid;
  DDGridParams params;

  QuasiPeriodicSignal() = default;
  QuasiPeriodicSignal(CMatrix g, DDGridParams p) : grid(std::move(g)), params(p) {
    if (grid.rows() != params.M || grid.cols() != params.N)
      throw std::invalid_argument("QuasiPeriodicSignal: grid shape does not match lattice");
  }
  static QuasiPeriodicSignal zeros(const DDGridParams& p) {
    return {CMatrix::Zero(p.M, p.N), p};
  }

  double energy() const { return grid.squaredNorm(); }
};

/// x_dd[k, l] for any integers: x[k mod M, l mod N] * e^{j2π floor(k/M) (l mod N) / N}.
inline cd qp_extend(const QuasiPeriodicSignal& x, long long k, long long l) {
  const int M = x.params.M;
  const int N = x.params.N;
  const long long n = floor_div(k, M);
  const long long k0 = k - n * M;
  const long long l0 = pos_mod(l, N);
  const cd v = x.grid(k0, l0);
  if (n == 0 || l0 == 0) return v;
  return v * unit_phase(n * l0, N);
}

struct Tap {
  int k = 0;
  int l = 0;
  cd value;
};

/// Discrete DD impulse response on a lattice. Taps are unique per (k, l),
/// sorted, and pruned below a floor relative to the largest magnitude.
class DDTapSet {
 public:
  static constexpr double kDefaultFloor = 1e-8;

  DDTapSet() = default;
  DDTapSet(int M, int N) : M_(M), N_(N) {}

  /// Builds a tap set, summing duplicate keys and pruning taps whose
  /// magnitude is below rel_floor * max magnitude.
  static DDTapSet from_taps(int M, int N, std::vector<Tap> taps, double rel_floor = kDefaultFloor) {
    DDTapSet s(M, N);
    std::sort(taps.begin(), taps.end(), [](const Tap& a, const Tap& b) {
      return a.k != b.k ? a.k < b.k : a.l < b.l;
    });
    for (const Tap& t : taps) {
      if (!s.taps_.empty() && s.taps_.back().k == t.k && s.taps_.back().l == t.l)
        s.taps_.back().value += t.value;
      else
        s.taps_.push_back(t);
    }
    s.prune(rel_floor);
    return s;
  }

  static DDTapSet delta(int M, int N, int k = 0, int l = 0, cd v = 1.0) {
    return from_taps(M, N, {{k, l, v}});
  }

  void prune(double rel_floor) {
    double peak = 0.0;
    for (const Tap& t : taps_) peak = std::max(peak, std::abs(t.value));
    const double thr = rel_floor * peak;
    std::erase_if(taps_, [&](const Tap& t) { return std::abs(t.value) < thr || t.value == cd{}; });
  }

  cd value(int k, int l) const {
    auto it = std::lower_bound(taps_.begin(), taps_.end(), std::pair{k, l},
                               [](const Tap& t, const std::pair<int, int>& key) {
                                 return t.k != key.first ? t.k < key.first : t.l < key.second;
                               });
    if (it != taps_.end() && it->k == k && it->l == l) return it->value;
    return {};
  }

  const std::vector<Tap>& taps() const { return taps_; }
  std::size_t size() const { return taps_.size(); }
  bool empty() const { return taps_.empty(); }
  int M() const { return M_; }
  int N() const { return N_; }

  double energy() const {
    double e = 0.0;
    for (const Tap& t : taps_) e += std::norm(t.value);
    return e;
  }

  DDTapSet scaled(cd a) const {
    DDTapSet s = *this;
    for (Tap& t : s.taps_) t.value *= a;
    return s;
  }

  DDTapSet restricted(int k_lo, int k_hi, int l_lo, int l_hi) const {
    DDTapSet s(M_, N_);
    for (const Tap& t : taps_)
      if (t.k >= k_lo && t.k <= k_hi && t.l >= l_lo && t.l <= l_hi) s.taps_.push_back(t);
    return s;
  }

 private:
  int M_ = 0;
  int N_ = 0;
  std::vector<Tap> taps_;
};

inline double max_abs_diff(const DDTapSet& a, const DDTapSet& b) {
  double m = 0.0;
  for (const Tap& t : a.taps()) m = std::max(m, std::abs(t.value - b.value(t.k, t.l)));
  for (const Tap& t : b.taps()) m = std::max(m, std::abs(t.value - a.value(t.k, t.l)));
  return m;
}

/// c[k,l] = sum a[k',l'] b[k-k', l-l'] e^{j2π l'(k-k')/(MN)}.
inline DDTapSet twisted_convolve(const DDTapSet& a, const DDTapSet& b, const DDGridParams& grid,
                                 double rel_floor = DDTapSet::kDefaultFloor) {
  if (a.M() != b.M() || a.N() != b.N() || a.M() != grid.M || a.N() != grid.N)
    throw std::invalid_argument("twisted_convolve: tap sets live on different lattices");
  const long long MN = grid.MN();
  std::vector<Tap> out;
  out.reserve(a.size() * b.size());
  for (const Tap& ta : a.taps())
    for (const Tap& tb : b.taps())
      out.push_back({ta.k + tb.k, ta.l + tb.l,
                     ta.value * tb.value * unit_phase(static_cast<long long>(ta.l) * tb.k, MN)});
  return DDTapSet::from_taps(grid.M, grid.N, std::move(out), rel_floor);
}

/// Noise-free channel output at any integer lattice point (k, l).
inline cd channel_output_at(const DDTapSet& h, const QuasiPeriodicSignal& x, long long k, long long l) {
  const long long MN = x.params.MN();
  cd acc{};
  for (const Tap& t : h.taps()) {
    const long long ks = k - t.k;
    acc += t.value * qp_extend(x, ks, l - t.l) * unit_phase(static_cast<long long>(t.l) * ks, MN);
  }
  return acc;
}

/// y[k,l] = sum h[k-k', l-l'] x_dd[k', l'] e^{j2π (l-l') k' / (MN)} over the
/// fundamental grid.
inline QuasiPeriodicSignal apply_channel_to_signal(const DDTapSet& h, const QuasiPeriodicSignal& x) {
  const int M = x.params.M;
  const int N = x.params.N;
  const long long MN = x.params.MN();
  QuasiPeriodicSignal y = QuasiPeriodicSignal::zeros(x.params);
  // Sparse inputs are common (pilot-only slots), so scatter from nonzeros.
  for (int k0 = 0; k0 < M; ++k0) {
    for (int l0 = 0; l0 < N; ++l0) {
      const cd xv = x.grid(k0, l0);
      if (xv == cd{}) continue;
      for (const Tap& t : h.taps()) {
        // Output at fundamental position of (k0 + t.k, l0 + t.l): reach it
        // from the input image that lands there.
        const long long kk = k0 + t.k;
        const long long n = floor_div(kk, M);
        const long long ko = kk - n * M;
        const long long ll = l0 + t.l;
        const long long lo = pos_mod(ll, N);
        // Input image at (k0 - n M, l0 + (lo - ll)) carries phase e^{-j2π n l0/N}.
        const long long kin = k0 - n * M;
        cd v = t.value * xv * unit_phase(static_cast<long long>(t.l) * kin, MN);
        if (n != 0) v *= unit_phase(-n * l0, N);
        y.grid(ko, lo) += v;
      }
    }
  }
  return y;
}

}  // namespace zakcra
