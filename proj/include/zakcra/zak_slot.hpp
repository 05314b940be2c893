#pragma once

// Per-slot Zak-OTFS processing: symbol placement, point-pilot channel
// estimate, data-tile channel matrix, MMSE equalization and reconstruction.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zakcra/dd_core.hpp"
#include "zakcra/pulses.hpp"
#include "zakcra/rng.hpp"
#include "zakcra/slot_layout.hpp"

namespace zakcra {

namespace detail {

inline bool ldlt_usable(const Eigen::LDLT<CMatrix>& f) {
  if (f.info() != Eigen::Success || !f.isPositive()) return false;
  const auto d = f.vectorD().cwiseAbs();
  return d.size() == 0 || d.minCoeff() > 1e-14 * d.maxCoeff();
}

}  // namespace detail

struct SlotObservation {
  CMatrix y_tile;  // (2 M_tile) x N_tile
  int slot_index = 0;
};

enum class EstimateSource { CrossAmbiguity, Genie };

struct ChannelEstimate {
  DDTapSet taps;
  EstimateSource source = EstimateSource::CrossAmbiguity;
};

/// Pilot √E_p at the pilot position, data √E_d · s in the data tile.
inline QuasiPeriodicSignal build_slot_symbols(const SlotLayout& layout, const DDGridParams& grid,
                                              const std::vector<cd>& data_syms, double E_p, double E_d) {
  if (grid.M != layout.slot_M() || grid.N != layout.slot_N())
    throw std::invalid_argument("build_slot_symbols: lattice does not match slot layout");
  if (static_cast<int>(data_syms.size()) != layout.data_symbols())
    throw std::invalid_argument("build_slot_symbols: expected " + std::to_string(layout.data_symbols()) +
                                " data symbols, got " + std::to_string(data_syms.size()));
  QuasiPeriodicSignal s = QuasiPeriodicSignal::zeros(grid);
  s.grid(layout.pilot_k(), layout.pilot_l()) = std::sqrt(E_p);
  const double a = std::sqrt(E_d);
  for (int k = 0; k < layout.M_tile; ++k)
    for (int l = 0; l < layout.N_tile; ++l)
      s.grid(layout.M_tile + k, l) = a * data_syms[static_cast<std::size_t>(k * layout.N_tile + l)];
  return s;
}

/// Cross-ambiguity between the received pilot tile and the known point
/// pilot, read off over the guard window and scaled so that a noiseless,
/// leakage-free observation returns h_eff itself.
inline ChannelEstimate estimate_cross_ambiguity(const SlotObservation& obs, const SlotLayout& layout,
                                                const DDGridParams& grid, double E_p) {
  if (obs.y_tile.rows() != layout.slot_M() || obs.y_tile.cols() != layout.slot_N())
    throw std::invalid_argument("estimate_cross_ambiguity: observation shape does not match layout");
  if (!(E_p > 0.0)) throw std::invalid_argument("estimate_cross_ambiguity: E_p must be positive");
  const long long MN = grid.MN();
  const int kp = layout.pilot_k();
  const int lp = layout.pilot_l();
  const double pilot = std::sqrt(E_p);
  std::vector<Tap> taps;
  taps.reserve(static_cast<std::size_t>((2 * layout.guard_k() + 1) * (2 * layout.guard_l() + 1)));
  // The pilot tile of s is a single point, so the correlation sum over the
  // tile collapses to one term per offset.
  for (int dk = -layout.guard_k(); dk <= layout.guard_k(); ++dk) {
    for (int dl = -layout.guard_l(); dl <= layout.guard_l(); ++dl) {
      const cd y = obs.y_tile(kp + dk, lp + dl);
      if (y == cd{}) continue;
      const cd a = y * pilot * unit_phase(-static_cast<long long>(dl) * kp, MN);
      taps.push_back({dk, dl, a / E_p});
    }
  }
  return {DDTapSet::from_taps(grid.M, grid.N, std::move(taps), 0.0), EstimateSource::CrossAmbiguity};
}

/// Lattice cells a filter's tail needs to fall below 1e-3 of its peak.
/// The sinc tail decays too slowly, so it gets the whole guard.
inline int filter_spill(const FilterSpec& spec, int guard) {
  if (spec.kind == FilterKind::Sinc) return guard;
  const double a = std::min(spec.alpha_tau, spec.alpha_nu);
  return static_cast<int>(std::ceil(std::sqrt(2.0 * std::log(1e3) / a)));
}

/// Keeps the estimate taps that can hold channel energy given the known
/// delay and Doppler spread: [-s, ceil(τ_max B) + s] x [-(ceil(ν_max T) + s), ceil(ν_max T) + s],
/// inside the guard window. Taps nearer the data tile edges are mostly
/// data leakage.
inline ChannelEstimate restrict_to_support(const ChannelEstimate& est, const SlotLayout& layout,
                                           const DDGridParams& grid, const FilterSpec& spec, double tau_max,
                                           double nu_max) {
  const int gk = layout.guard_k(), gl = layout.guard_l();
  const int sk = filter_spill(spec, gk), sl = filter_spill(spec, gl);
  const int kmax = static_cast<int>(std::ceil(tau_max * grid.bandwidth() - 1e-9));
  const int lmax = static_cast<int>(std::ceil(nu_max * grid.duration() - 1e-9));
  const int k_lo = std::max(-gk, -sk), k_hi = std::min(gk, kmax + sk);
  const int l_hi = std::min(gl, lmax + sl);
  return {est.taps.restricted(k_lo, k_hi, -l_hi, l_hi), est.source};
}

inline ChannelEstimate genie_estimate(const DDTapSet& h) { return {h, EstimateSource::Genie}; }

/// Data-tile channel matrix, row-major over (delay - M_tile, Doppler).
inline CMatrix build_H_matrix(const ChannelEstimate& est, const SlotLayout& layout, const DDGridParams& grid) {
  const int Mt = layout.M_tile;
  const int Nt = layout.N_tile;
  const long long MN = grid.MN();
  CMatrix H = CMatrix::Zero(layout.data_symbols(), layout.data_symbols());
  for (const Tap& t : est.taps.taps()) {
    for (int kt = Mt; kt < 2 * Mt; ++kt) {
      const int kd = kt + t.k;
      if (kd < Mt || kd >= 2 * Mt) continue;
      const cd ph = t.value * unit_phase(static_cast<long long>(t.l) * kt, MN);
      for (int lt = 0; lt < Nt; ++lt) {
        const int ld = static_cast<int>(pos_mod(lt + t.l, Nt));
        H(layout.data_index(kd, ld), layout.data_index(kt, lt)) += ph;
      }
    }
  }
  return H;
}

/// ŝ = Ĥ^H (Ĥ Ĥ^H + R_n/E_d)^{-1} ỹ via a Hermitian factorization.
inline CVector mmse_equalize(const CMatrix& H, const CVector& y, const CMatrix& R_n, double E_d) {
  if (H.rows() != y.size() || R_n.rows() != H.rows() || R_n.cols() != H.rows())
    throw std::invalid_argument("mmse_equalize: dimension mismatch");
  if (!(E_d > 0.0)) throw std::invalid_argument("mmse_equalize: E_d must be positive");
  CMatrix A = H * H.adjoint() + R_n / E_d;
  Eigen::LDLT<CMatrix> ldlt(A);
  if (!detail::ldlt_usable(ldlt)) throw std::runtime_error("mmse_equalize: regularized matrix is singular");
  CVector x = ldlt.solve(y);
  if (!x.allFinite()) throw std::runtime_error("mmse_equalize: solve produced non-finite values");
  return H.adjoint() * x;
}

/// Noise covariance of the data tile in the Doppler-DFT domain: one
/// M_tile x M_tile block per Doppler frequency. Valid because the data
/// tile spans a full Doppler period, which makes H and R_n block-circulant
/// along Doppler.
inline std::vector<CMatrix> doppler_noise_blocks(const FilterSpec& spec, const DDGridParams& grid,
                                                 const SlotLayout& layout, double N0 = 1.0) {
  const int Mt = layout.M_tile;
  const int Nt = layout.N_tile;
  std::vector<CMatrix> col(Nt, CMatrix::Zero(Mt, Mt));
  for (int c = 0; c < Nt; ++c)
    for (int a = 0; a < Mt; ++a)
      for (int b = 0; b < Mt; ++b) col[c](a, b) = N0 * noise_covariance_entry(spec, grid, Mt + a, c, Mt + b, 0);
  std::vector<CMatrix> out(Nt, CMatrix::Zero(Mt, Mt));
  for (int f = 0; f < Nt; ++f)
    for (int c = 0; c < Nt; ++c) out[f] += col[c] * unit_phase(-static_cast<long long>(c) * f, Nt);
  return out;
}

/// Same estimator as mmse_equalize(build_H_matrix(...), ...) solved as
/// N_tile independent M_tile x M_tile systems. y_data is M_tile x N_tile.
inline CMatrix mmse_equalize_doppler(const ChannelEstimate& est, const SlotLayout& layout,
                                     const DDGridParams& grid, const CMatrix& y_data,
                                     const std::vector<CMatrix>& R_blocks, double E_d) {
  const int Mt = layout.M_tile;
  const int Nt = layout.N_tile;
  if (y_data.rows() != Mt || y_data.cols() != Nt || static_cast<int>(R_blocks.size()) != Nt)
    throw std::invalid_argument("mmse_equalize_doppler: dimension mismatch");
  const long long MN = grid.MN();

  // G[c](a, b): response at data row a, Doppler l + c to data row b, Doppler l.
  std::vector<CMatrix> G(Nt, CMatrix::Zero(Mt, Mt));
  for (const Tap& t : est.taps.taps()) {
    for (int b = 0; b < Mt; ++b) {
      const int a = b + t.k;
      if (a < 0 || a >= Mt) continue;
      G[pos_mod(t.l, Nt)](a, b) += t.value * unit_phase(static_cast<long long>(t.l) * (b + Mt), MN);
    }
  }
  std::vector<cd> w(Nt);
  for (int i = 0; i < Nt; ++i) w[i] = unit_phase(-i, Nt);
  auto tw = [&](long long e) { return w[pos_mod(e, Nt)]; };

  const double sN = std::sqrt(static_cast<double>(Nt));
  CMatrix Y(Mt, Nt);
  for (int f = 0; f < Nt; ++f)
    for (int a = 0; a < Mt; ++a) {
      cd acc{};
      for (int l = 0; l < Nt; ++l) acc += y_data(a, l) * tw(static_cast<long long>(l) * f);
      Y(a, f) = acc / sN;
    }

  CMatrix S(Mt, Nt);
  for (int f = 0; f < Nt; ++f) {
    CMatrix Gf = CMatrix::Zero(Mt, Mt);
    for (int c = 0; c < Nt; ++c)
      if (!G[c].isZero(0.0)) Gf += G[c] * tw(static_cast<long long>(c) * f);
    CMatrix A = Gf * Gf.adjoint() + R_blocks[f] / E_d;
    Eigen::LDLT<CMatrix> ldlt(A);
    if (!detail::ldlt_usable(ldlt))
      throw std::runtime_error("mmse_equalize_doppler: regularized block is singular");
    S.col(f) = Gf.adjoint() * ldlt.solve(Y.col(f));
  }

  CMatrix s(Mt, Nt);
  for (int a = 0; a < Mt; ++a)
    for (int l = 0; l < Nt; ++l) {
      cd acc{};
      for (int f = 0; f < Nt; ++f) acc += S(a, f) * std::conj(tw(static_cast<long long>(l) * f));
      s(a, l) = acc / sN;
    }
  return s;
}

/// Received contribution of a decided slot through the estimated channel.
inline QuasiPeriodicSignal reconstruct_user_signal(const ChannelEstimate& est, const QuasiPeriodicSignal& decided_slot,
                                                   const SlotLayout& layout) {
  if (decided_slot.params.M != layout.slot_M() || decided_slot.params.N != layout.slot_N())
    throw std::invalid_argument("reconstruct_user_signal: slot shape does not match layout");
  return apply_channel_to_signal(est.taps, decided_slot);
}

inline CMatrix data_tile(const CMatrix& slot, const SlotLayout& layout) {
  return slot.block(layout.M_tile, 0, layout.M_tile, layout.N_tile);
}

/// Data tile of the observation with the known pilot, passed through the
/// estimated channel, taken out.
inline CMatrix data_tile_without_pilot(const CMatrix& slot, const ChannelEstimate& est, const SlotLayout& layout,
                                       const DDGridParams& grid, double E_p) {
  QuasiPeriodicSignal pilot = QuasiPeriodicSignal::zeros(grid);
  pilot.grid(layout.pilot_k(), layout.pilot_l()) = std::sqrt(E_p);
  return data_tile(slot, layout) - data_tile(apply_channel_to_signal(est.taps, pilot).grid, layout);
}

/// Draws correlated receiver noise for one slot with covariance N0 * R,
/// R the sampled matched-filter noise covariance over the slot lattice.
class SlotNoiseModel {
 public:
  SlotNoiseModel() = default;
  SlotNoiseModel(const FilterSpec& spec, const DDGridParams& grid) : M_(grid.M), N_(grid.N) {
    white_ = spec.kind == FilterKind::Sinc;
    if (white_) return;
    const CMatrix R = slot_noise_covariance(spec, grid, 1.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
    if (es.info() != Eigen::Success) throw std::runtime_error("SlotNoiseModel: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = es.eigenvectors() * lam.asDiagonal();
  }

  CMatrix sample(Rng& rng, double N0 = 1.0) const {
    const int S = M_ * N_;
    CVector z(S);
    for (int i = 0; i < S; ++i) z[i] = complex_normal(rng, N0);
    if (!white_) z = factor_ * z;
    CMatrix out(M_, N_);
    for (int k = 0; k < M_; ++k)
      for (int l = 0; l < N_; ++l) out(k, l) = z[k * N_ + l];
    return out;
  }

  bool white() const { return white_; }

 private:
  int M_ = 0;
  int N_ = 0;
  bool white_ = true;
  CMatrix factor_;
};

}  // namespace zakcra
