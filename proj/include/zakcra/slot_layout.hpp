#pragma once

#include <stdexcept>

#include "zakcra/dd_core.hpp"

namespace zakcra {

/// One slot = pilot tile (delay rows [0, M_tile)) followed by a data tile
/// (rows [M_tile, 2 M_tile)), each N_tile Doppler bins wide.
struct SlotLayout {
  int M_tile = 0;
  int N_tile = 0;

  static SlotLayout make(int M_tile, int N_tile) {
    if (M_tile < 2 || N_tile < 2 || M_tile % 2 || N_tile % 2)
      throw std::invalid_argument("SlotLayout: tile dimensions must be even and >= 2");
    return {M_tile, N_tile};
  }

  int pilot_k() const { return M_tile / 2; }
  int pilot_l() const { return N_tile / 2; }
  int slot_M() const { return 2 * M_tile; }
  int slot_N() const { return N_tile; }
  int data_symbols() const { return M_tile * N_tile; }
  int guard_k() const { return M_tile / 2 - 1; }
  int guard_l() const { return N_tile / 2 - 1; }

  /// Lattice on which one slot is processed.
  DDGridParams slot_grid(double nu_p) const { return DDGridParams::make(slot_M(), slot_N(), nu_p); }

  /// Row-major (delay, Doppler) index of a data-tile sample.
  int data_index(int k_abs, int l) const { return (k_abs - M_tile) * N_tile + l; }
};

}  // namespace zakcra
