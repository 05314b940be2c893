#pragma once

// CP-OFDM comparison PHY: comb pilots, Wiener interpolation, Jakes
// prediction across slots, per-subcarrier MMSE.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zakcra/channel.hpp"
#include "zakcra/cra_mac.hpp"
#include "zakcra/dd_core.hpp"

namespace zakcra {

struct OfdmConfig {
  double delta_f = 30e3;
  int fft_size = 256;  // frame-wide M, sample rate = fft_size * delta_f
  int M_sub = 32;      // subcarriers per slot
  int N_ofdm = 16;     // symbols per slot
  int cp_len = 20;
  int p = 8;
  int q = 16;
  double nu_max = 815.0;

  static OfdmConfig from_frame(const FrameConfig& f, double nu_max) {
    OfdmConfig c;
    c.delta_f = f.nu_p;
    c.M_sub = f.layout.slot_M();
    c.N_ofdm = f.layout.slot_N();
    c.p = f.p;
    c.q = f.q;
    c.fft_size = f.p * c.M_sub;
    c.nu_max = nu_max;
    c.cp_len = static_cast<int>(std::ceil(veh_a::kMaxDelay * c.sample_rate() - 1e-9));
    return c;
  }

  double sample_rate() const { return fft_size * delta_f; }
  double T_sym() const { return 1.0 / delta_f; }
  double T_cp() const { return cp_len / sample_rate(); }
  int symbol_samples() const { return fft_size + cp_len; }
  int slot_samples() const { return N_ofdm * symbol_samples(); }
  double slot_duration() const { return N_ofdm * (T_sym() + T_cp()); }
  int pilots() const { return (M_sub / 2) * N_ofdm; }

  /// Absolute FFT bin of subcarrier m in frequency block i.
  int bin(int i, int m) const { return i * M_sub + m; }
  /// Sample index where the slot in time column j starts.
  long long slot_start(int j) const { return static_cast<long long>(j) * slot_samples(); }
};

namespace detail {

inline const std::vector<cd>& twiddles(int M) {
  thread_local std::vector<cd> tw;
  thread_local int cached = 0;
  if (cached != M) {
    tw.resize(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) tw[i] = unit_phase(i, M);
    cached = M;
  }
  return tw;
}

}  // namespace detail

/// Unitary IDFT of each symbol over the slot's subcarrier block, with CP.
inline std::vector<cd> ofdm_modulate_slot(const CMatrix& grid, const OfdmConfig& cfg, int band = 0) {
  if (grid.rows() != cfg.M_sub || grid.cols() != cfg.N_ofdm)
    throw std::invalid_argument("ofdm_modulate_slot: grid shape mismatch");
  const int M = cfg.fft_size;
  const auto& tw = detail::twiddles(M);
  const double sc = 1.0 / std::sqrt(static_cast<double>(M));
  std::vector<cd> out(static_cast<std::size_t>(cfg.slot_samples()));
  std::vector<cd> sym(static_cast<std::size_t>(M));
  for (int n = 0; n < cfg.N_ofdm; ++n) {
    std::fill(sym.begin(), sym.end(), cd{});
    for (int m = 0; m < cfg.M_sub; ++m) {
      const cd X = grid(m, n);
      if (X == cd{}) continue;
      const long long b = cfg.bin(band, m);
      for (int t = 0; t < M; ++t) sym[t] += X * tw[(b * t) % M];
    }
    cd* dst = out.data() + static_cast<std::size_t>(n) * cfg.symbol_samples();
    for (int t = 0; t < cfg.cp_len; ++t) dst[t] = sc * sym[M - cfg.cp_len + t];
    for (int t = 0; t < M; ++t) dst[cfg.cp_len + t] = sc * sym[t];
  }
  return out;
}

inline CMatrix ofdm_demodulate_slot(const std::vector<cd>& rx, const OfdmConfig& cfg, int band = 0) {
  if (static_cast<int>(rx.size()) != cfg.slot_samples())
    throw std::invalid_argument("ofdm_demodulate_slot: sample count mismatch");
  const int M = cfg.fft_size;
  const auto& tw = detail::twiddles(M);
  const double sc = 1.0 / std::sqrt(static_cast<double>(M));
  CMatrix Y(cfg.M_sub, cfg.N_ofdm);
  for (int n = 0; n < cfg.N_ofdm; ++n) {
    const cd* src = rx.data() + static_cast<std::size_t>(n) * cfg.symbol_samples() + cfg.cp_len;
    for (int m = 0; m < cfg.M_sub; ++m) {
      const long long b = cfg.bin(band, m);
      cd acc{};
      for (int t = 0; t < M; ++t) acc += src[t] * std::conj(tw[(b * t) % M]);
      Y(m, n) = sc * acc;
    }
  }
  return Y;
}

struct TimeVaryingTap {
  cd gain;
  int delay_samples = 0;
  double doppler = 0.0;
};

/// Veh-A paths on the OFDM sample grid (delays rounded to samples).
inline std::vector<TimeVaryingTap> to_time_varying(const PathSet& ps, const OfdmConfig& cfg) {
  std::vector<TimeVaryingTap> t;
  for (const Path& p : ps.paths) {
    const int d = static_cast<int>(std::lround(p.delay * cfg.sample_rate()));
    if (d > cfg.cp_len) throw std::invalid_argument("to_time_varying: path delay exceeds the cyclic prefix");
    t.push_back({p.gain, d, p.doppler});
  }
  return t;
}

/// r[n] = Σ g_i e^{j2π ν_i (t0 + n)/fs} s[n - d_i]; samples before the slot are zero.
inline std::vector<cd> ofdm_apply_channel(const std::vector<cd>& s, const std::vector<TimeVaryingTap>& taps,
                                          const OfdmConfig& cfg, long long t0 = 0) {
  const double fs = cfg.sample_rate();
  std::vector<cd> r(s.size());
  for (const auto& tp : taps) {
    const double w = kTwoPi * tp.doppler / fs;
    const cd step = std::polar(1.0, w);
    for (std::size_t n0 = 0; n0 < s.size(); n0 += 512) {
      // restart the rotation exactly every block to keep it from drifting
      cd rot = tp.gain * std::polar(1.0, w * static_cast<double>(t0 + static_cast<long long>(n0)));
      const std::size_t n1 = std::min(s.size(), n0 + 512);
      for (std::size_t n = n0; n < n1; ++n) {
        if (static_cast<long long>(n) >= tp.delay_samples) r[n] += rot * s[n - static_cast<std::size_t>(tp.delay_samples)];
        rot *= step;
      }
    }
  }
  return r;
}

/// Σ p_i e^{-j2π Δf_hz τ_i} over the nominal Veh-A profile.
inline cd veh_a_frequency_correlation(double df_hz) {
  const auto p = veh_a::normalized_powers();
  cd acc{};
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * std::polar(1.0, -kTwoPi * df_hz * veh_a::kDelaysUs[i] * 1e-6);
  return acc;
}

/// Same correlation with each delay rounded to the simulation sample grid.
inline cd veh_a_frequency_correlation(double df_hz, double fs) {
  const auto p = veh_a::normalized_powers();
  cd acc{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double tau = std::round(veh_a::kDelaysUs[i] * 1e-6 * fs) / fs;
    acc += p[i] * std::polar(1.0, -kTwoPi * df_hz * tau);
  }
  return acc;
}

inline double jakes_correlation(double nu_max, double dt) { return std::cyl_bessel_j(0.0, std::abs(kTwoPi * nu_max * dt)); }

/// Pilot comb (even subcarriers, every symbol), Wiener interpolation
/// weights to every resource element, and the predictor across slots.
/// Depends on configuration and SNR only, shared by all trials.
class OfdmEstimator {
 public:
  OfdmEstimator(const OfdmConfig& cfg, double E_pilot, double N0 = 1.0) : cfg_(cfg) {
    const int Ms = cfg.M_sub, Nn = cfg.N_ofdm;
    for (int n = 0; n < Nn; ++n)
      for (int m = 0; m < Ms; m += 2) pilots_.push_back({m, n});
    for (int n = 0; n < Nn; ++n)
      for (int m = 1; m < Ms; m += 2) data_.push_back({m, n});
    const double Ts = cfg.T_sym() + cfg.T_cp();
    auto corr = [&](int dm, int dn) {
      return veh_a_frequency_correlation(dm * cfg.delta_f, cfg.sample_rate()) * jakes_correlation(cfg.nu_max, dn * Ts);
    };
    const int P = static_cast<int>(pilots_.size());
    CMatrix Rpp(P, P);
    for (int a = 0; a < P; ++a)
      for (int b = 0; b < P; ++b)
        Rpp(a, b) = corr(pilots_[a].first - pilots_[b].first, pilots_[a].second - pilots_[b].second);
    const int A = Ms * Nn;
    CMatrix Rap(A, P);
    for (int m = 0; m < Ms; ++m)
      for (int n = 0; n < Nn; ++n)
        for (int b = 0; b < P; ++b) Rap(index(m, n), b) = corr(m - pilots_[b].first, n - pilots_[b].second);
    CMatrix reg = Rpp + (N0 / E_pilot) * CMatrix::Identity(P, P);
    Eigen::LDLT<CMatrix> f(reg);
    W_ = f.solve(Rap.adjoint()).adjoint();
    // mean error variance over data positions
    double acc = 0.0;
    for (const auto& [m, n] : data_) {
      const int i = index(m, n);
      acc += 1.0 - (W_.row(i) * Rap.row(i).adjoint())(0, 0).real();
    }
    err_var_ = std::max(0.0, acc / static_cast<double>(data_.size()));

    // per-symbol frequency predictor from band i to band i + d
    const double fs = cfg.sample_rate();
    const double s2 = std::max(err_var_, 1e-9);
    CMatrix Raa(Ms, Ms);
    for (int m = 0; m < Ms; ++m)
      for (int k = 0; k < Ms; ++k) Raa(m, k) = veh_a_frequency_correlation((m - k) * cfg.delta_f, fs);
    Eigen::LDLT<CMatrix> fa(Raa + s2 * CMatrix::Identity(Ms, Ms));
    for (int d = -(cfg.p - 1); d <= cfg.p - 1; ++d) {
      CMatrix Rba(Ms, Ms);
      for (int m = 0; m < Ms; ++m)
        for (int k = 0; k < Ms; ++k) Rba(m, k) = veh_a_frequency_correlation((d * Ms + m - k) * cfg.delta_f, fs);
      G_.push_back(fa.solve(Rba.adjoint()).adjoint());
    }
  }

  int index(int m, int n) const { return n * cfg_.M_sub + m; }
  const std::vector<std::pair<int, int>>& pilot_positions() const { return pilots_; }
  const std::vector<std::pair<int, int>>& data_positions() const { return data_; }
  double error_variance() const { return err_var_; }
  const OfdmConfig& config() const { return cfg_; }

  /// Estimated channel at every resource element of the slot.
  CMatrix estimate(const CMatrix& Y, double E_pilot) const {
    CVector ls(static_cast<int>(pilots_.size()));
    const double a = 1.0 / std::sqrt(E_pilot);
    for (std::size_t i = 0; i < pilots_.size(); ++i) ls[static_cast<int>(i)] = Y(pilots_[i].first, pilots_[i].second) * a;
    CVector h = W_ * ls;
    CMatrix H(cfg_.M_sub, cfg_.N_ofdm);
    for (int m = 0; m < cfg_.M_sub; ++m)
      for (int n = 0; n < cfg_.N_ofdm; ++n) H(m, n) = h[index(m, n)];
    return H;
  }

  /// Per-subcarrier MMSE of the data elements, scaled back to unit energy.
  std::vector<cd> equalize(const CMatrix& Y, const CMatrix& H, double E_d, double N0 = 1.0) const {
    std::vector<cd> out;
    out.reserve(data_.size());
    const double sd = std::sqrt(E_d);
    for (const auto& [m, n] : data_) {
      const cd h = H(m, n);
      out.push_back(std::conj(h) * Y(m, n) / (sd * (std::norm(h) + N0 / E_d)));
    }
    return out;
  }

  /// Frequency grid carrying pilots √E_pilot and data √E_d · s.
  CMatrix slot_grid(const std::vector<cd>& data, double E_pilot, double E_d) const {
    if (data.size() != data_.size()) throw std::invalid_argument("OfdmEstimator::slot_grid: data size mismatch");
    CMatrix X(cfg_.M_sub, cfg_.N_ofdm);
    for (const auto& [m, n] : pilots_) X(m, n) = std::sqrt(E_pilot);
    for (std::size_t i = 0; i < data_.size(); ++i) X(data_[i].first, data_[i].second) = std::sqrt(E_d) * data[i];
    return X;
  }

  /// Channel of slot b predicted from the estimate at slot a: Jakes factor
  /// in time, LMMSE over the delay profile in frequency.
  CMatrix predict(const CMatrix& H_a, int slot_a, int slot_b) const {
    if (slot_a == slot_b) return H_a;
    const int ia = slot_a / cfg_.q, ja = slot_a % cfg_.q;
    const int ib = slot_b / cfg_.q, jb = slot_b % cfg_.q;
    const double rt = jakes_correlation(cfg_.nu_max, std::abs(jb - ja) * cfg_.slot_duration());
    return rt * (G_[static_cast<std::size_t>(ib - ia + cfg_.p - 1)] * H_a);
  }

 private:
  OfdmConfig cfg_;
  std::vector<std::pair<int, int>> pilots_;
  std::vector<std::pair<int, int>> data_;
  CMatrix W_;
  std::vector<CMatrix> G_;
  double err_var_ = 0.0;
};

/// ĥ_b = ρ ĥ_a with ρ from the Jakes correlation at the slot distance.
inline CMatrix ofdm_predict_channel(const CMatrix& H_a, int delta, const OfdmConfig& cfg, double err_var = 0.0) {
  if (delta < 0) throw std::invalid_argument("ofdm_predict_channel: delta must be non-negative");
  if (delta == 0) return H_a;
  return H_a * (jakes_correlation(cfg.nu_max, delta * cfg.slot_duration()) / (1.0 + err_var));
}

/// Received frequency grid of one user's replica in slot a.
inline CMatrix ofdm_slot_response(const CMatrix& X, const std::vector<TimeVaryingTap>& taps, const OfdmConfig& cfg,
                                  int slot) {
  const int i = slot / cfg.q, j = slot % cfg.q;
  auto tx = ofdm_modulate_slot(X, cfg, i);
  auto rx = ofdm_apply_channel(tx, taps, cfg, cfg.slot_start(j));
  return ofdm_demodulate_slot(rx, cfg, i);
}

}  // namespace zakcra
