#pragma once

// Frame geometry, replica placement and the iterative singleton/SIC
// decoder, plus the collision-channel peeling reference.

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zakcra/dd_core.hpp"
#include "zakcra/rng.hpp"
#include "zakcra/slot_layout.hpp"

namespace zakcra {

struct FrameConfig {
  int p = 8;   // slots along delay
  int q = 16;  // slots along Doppler
  int r = 3;
  SlotLayout layout;
  double nu_p = 30e3;

  static FrameConfig make(int p, int q, int r, SlotLayout layout, double nu_p) {
    FrameConfig c{p, q, r, layout, nu_p};
    c.validate();
    return c;
  }
  void validate() const {
    if (p <= 0 || q <= 0) throw std::invalid_argument("FrameConfig: p and q must be positive");
    if (r < 1 || r > p * q) throw std::invalid_argument("FrameConfig: need 1 <= r <= N_s");
  }
  int N_s() const { return p * q; }
  DDGridParams frame_grid() const { return DDGridParams::make(p * layout.slot_M(), q * layout.slot_N(), nu_p); }
  DDGridParams slot_grid() const { return layout.slot_grid(nu_p); }
};

inline std::pair<int, int> slot_to_coords(int a, const FrameConfig& cfg) {
  if (a < 0 || a >= cfg.N_s())
    throw std::out_of_range("slot_to_coords: slot " + std::to_string(a) + " outside [0, " +
                            std::to_string(cfg.N_s()) + ")");
  return {a / cfg.q, a % cfg.q};
}

/// Row (delay) and column (Doppler) offset of slot (i, j) in the frame grid.
inline std::pair<int, int> coords_to_offsets(int i, int j, const FrameConfig& cfg) {
  return {cfg.layout.slot_M() * i, cfg.layout.slot_N() * j};
}

/// r distinct slot indices, uniform over all r-subsets, ascending.
inline std::vector<int> select_slots(Rng& rng, const FrameConfig& cfg) {
  std::vector<int> all(static_cast<std::size_t>(cfg.N_s()));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(cfg.r));
  std::sample(all.begin(), all.end(), std::back_inserter(out), cfg.r, rng);
  return out;
}

struct UserTransmission {
  std::vector<int> slots;
  QuasiPeriodicSignal slot_grid;  // on the slot lattice
};

inline CMatrix extract_slot(const CMatrix& frame, int a, const FrameConfig& cfg) {
  auto [i, j] = slot_to_coords(a, cfg);
  auto [r0, c0] = coords_to_offsets(i, j, cfg);
  return frame.block(r0, c0, cfg.layout.slot_M(), cfg.layout.slot_N());
}

inline void add_to_slot(CMatrix& frame, int a, const FrameConfig& cfg, const CMatrix& v, double sign = 1.0) {
  auto [i, j] = slot_to_coords(a, cfg);
  auto [r0, c0] = coords_to_offsets(i, j, cfg);
  frame.block(r0, c0, cfg.layout.slot_M(), cfg.layout.slot_N()) += sign * v;
}

/// Transmitted frame: every user's slot grid copied into each of its slots.
inline CMatrix place_replicas(const std::vector<UserTransmission>& users, const FrameConfig& cfg) {
  const DDGridParams fg = cfg.frame_grid();
  CMatrix frame = CMatrix::Zero(fg.M, fg.N);
  for (const auto& u : users) {
    if (u.slot_grid.grid.rows() != cfg.layout.slot_M() || u.slot_grid.grid.cols() != cfg.layout.slot_N())
      throw std::invalid_argument("place_replicas: slot grid shape mismatch");
    for (int a : u.slots) add_to_slot(frame, a, cfg, u.slot_grid.grid);
  }
  return frame;
}

struct DecodeIteration {
  std::vector<int> decoded;
  std::vector<int> slots_cancelled;
};

struct DecodeLog {
  std::vector<DecodeIteration> iterations;
  std::vector<bool> decoded;
  std::vector<int> decoded_in_slot;  // -1 if never decoded
  int attempts = 0;

  int decoded_count() const { return static_cast<int>(std::count(decoded.begin(), decoded.end(), true)); }
};

/// Iterative singleton decoding. `phy` supplies
///   bool try_decode(int user, int slot)
///   void cancel(int user, int decoded_slot, const std::vector<int>& slots)
/// try_decode returns true on CRC pass. With sic = false nothing is ever
/// cancelled and a slot is a singleton only if one user chose it.
template <class Phy>
DecodeLog run_sic_decoder(const std::vector<std::vector<int>>& user_slots, int N_s, Phy& phy, bool sic = true) {
  const int K = static_cast<int>(user_slots.size());
  std::vector<std::vector<int>> in_slot(static_cast<std::size_t>(N_s));
  for (int u = 0; u < K; ++u)
    for (int a : user_slots[u]) {
      if (a < 0 || a >= N_s) throw std::out_of_range("run_sic_decoder: slot index out of range");
      in_slot[a].push_back(u);
    }
  std::vector<int> degree(N_s), version(N_s, 0);
  for (int a = 0; a < N_s; ++a) degree[a] = static_cast<int>(in_slot[a].size());
  std::vector<int> live = degree;
  std::set<std::pair<int, int>> tried;

  DecodeLog log;
  log.decoded.assign(static_cast<std::size_t>(K), false);
  log.decoded_in_slot.assign(static_cast<std::size_t>(K), -1);
  for (;;) {
    DecodeIteration it;
    for (int a = 0; a < N_s; ++a) {
      if ((sic ? live[a] : degree[a]) != 1) continue;
      int u = -1;
      for (int v : in_slot[a])
        if (!log.decoded[v]) u = v;
      if (u < 0) continue;
      if (!tried.insert({a, version[a]}).second) continue;
      ++log.attempts;
      if (!phy.try_decode(u, a)) continue;
      log.decoded[u] = true;
      log.decoded_in_slot[u] = a;
      it.decoded.push_back(u);
      if (sic) {
        phy.cancel(u, a, user_slots[u]);
        for (int s : user_slots[u]) {
          --live[s];
          ++version[s];
          it.slots_cancelled.push_back(s);
        }
      }
    }
    if (it.decoded.empty()) break;
    log.iterations.push_back(std::move(it));
  }
  return log;
}

/// Collision-channel peeling with perfect cancellation.
inline std::vector<bool> ideal_peeling_oracle(const std::vector<std::vector<int>>& user_slots, int N_s) {
  const int K = static_cast<int>(user_slots.size());
  std::vector<std::vector<int>> in_slot(static_cast<std::size_t>(N_s));
  for (int u = 0; u < K; ++u)
    for (int a : user_slots[u]) in_slot[a].push_back(u);
  std::vector<int> live(N_s);
  for (int a = 0; a < N_s; ++a) live[a] = static_cast<int>(in_slot[a].size());
  std::vector<bool> done(static_cast<std::size_t>(K), false);
  std::vector<int> stack;
  for (int a = 0; a < N_s; ++a)
    if (live[a] == 1) stack.push_back(a);
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    if (live[a] != 1) continue;
    int u = -1;
    for (int v : in_slot[a])
      if (!done[v]) u = v;
    if (u < 0) continue;
    done[u] = true;
    for (int s : user_slots[u])
      if (--live[s] == 1) stack.push_back(s);
  }
  return done;
}

}  // namespace zakcra
