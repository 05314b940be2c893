#pragma once

// One Monte Carlo frame end to end: transmit every user's replicas
// through its own channel, add receiver noise on occupied slots, run the
// singleton/SIC decoder with the Zak-OTFS or OFDM slot chain.

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zakcra/channel.hpp"
#include "zakcra/coding.hpp"
#include "zakcra/cra_mac.hpp"
#include "zakcra/ofdm.hpp"
#include "zakcra/pulses.hpp"
#include "zakcra/rng.hpp"
#include "zakcra/scenario.hpp"
#include "zakcra/zak_slot.hpp"

namespace zakcra {

namespace stream_tag {
inline constexpr std::uint64_t kUserDraw = 1;  // payload and channel
inline constexpr std::uint64_t kSlotPick = 2;
inline constexpr std::uint64_t kNoise = 3;
}  // namespace stream_tag

struct TrialUser {
  std::vector<int> slots;
  Bits payload;
  PathSet paths;
};

inline CodecConfig codec_for(const SlotLayout& layout) {
  if (layout.M_tile == 4 && layout.N_tile == 4) return CodecConfig::small();
  if (layout.M_tile == 16 && layout.N_tile == 16) return CodecConfig::large();
  throw ConfigError("no code matches a " + std::to_string(layout.M_tile) + "x" + std::to_string(layout.N_tile) +
                    " data tile");
}

/// Everything that depends on the configuration but not on SNR or trial.
struct SimContext {
  ScenarioConfig cfg;
  FrameConfig frame;
  SlotLayout layout;
  PacketCodec codec;
  FilterSpec filter;
  DDGridParams slot_grid;
  std::shared_ptr<const SlotNoiseModel> noise;
  std::vector<CMatrix> R_blocks;
  OfdmConfig ofdm;

  explicit SimContext(const ScenarioConfig& c)
      : cfg(c), frame(c.frame()), layout(c.layout()), codec(codec_for(c.layout())), filter(c.filter()) {
    slot_grid = frame.slot_grid();
    if (is_zak(c.modem)) {
      noise = std::make_shared<SlotNoiseModel>(filter, slot_grid);
      R_blocks = doppler_noise_blocks(filter, slot_grid, layout, 1.0);
    } else {
      ofdm = OfdmConfig::from_frame(frame, c.nu_max);
    }
  }
};

struct SnrContext {
  double snr_db = 0.0;
  Energies en;
  std::shared_ptr<const OfdmEstimator> ofdm_est;

  SnrContext(const SimContext& ctx, double snr) : snr_db(snr), en(modem_energies(ctx.cfg, snr)) {
    if (!is_zak(ctx.cfg.modem)) ofdm_est = std::make_shared<OfdmEstimator>(ctx.ofdm, en.E_p, en.N0);
  }
};

inline Bits random_payload(Rng& rng, int n) {
  Bits b(static_cast<std::size_t>(n));
  for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1u);
  return b;
}

/// Payload and Veh-A channel of user u in a trial; independent of slots,
/// SNR and modem so grid points share them.
inline TrialUser draw_user(const SimContext& ctx, std::uint64_t trial, int u, std::vector<int> slots) {
  Rng rng = derive_stream(ctx.cfg.seed, {trial, stream_tag::kUserDraw, static_cast<std::uint64_t>(u)});
  TrialUser t;
  t.slots = std::move(slots);
  t.payload = random_payload(rng, ctx.codec.config().payload_bits());
  t.paths = sample_veh_a(rng, ctx.cfg.nu_max);
  return t;
}

inline std::vector<int> draw_slots(const SimContext& ctx, std::uint64_t trial, int u, int r) {
  Rng rng = derive_stream(ctx.cfg.seed, {trial, stream_tag::kSlotPick, static_cast<std::uint64_t>(u)});
  FrameConfig f = ctx.frame;
  f.r = r;
  return select_slots(rng, f);
}

inline Rng noise_stream(const SimContext& ctx, std::uint64_t trial, int slot) {
  return derive_stream(ctx.cfg.seed, {trial, stream_tag::kNoise, static_cast<std::uint64_t>(slot)});
}

inline std::vector<std::vector<int>> slot_sets(const std::vector<TrialUser>& users) {
  std::vector<std::vector<int>> s;
  for (const auto& u : users) s.push_back(u.slots);
  return s;
}

struct FrameOutcome {
  DecodeLog log;
  std::vector<bool> success;  // decoded with the right payload
  std::vector<std::optional<Bits>> decided;
  double residual_energy = 0.0;  // frame energy left after decoding
};

class ZakFramePhy {
 public:
  ZakFramePhy(const SimContext& ctx, const SnrContext& snr, const std::vector<TrialUser>& users, std::uint64_t trial)
      : ctx_(ctx), snr_(snr) {
    const auto fg = ctx.frame.frame_grid();
    frame_ = CMatrix::Zero(fg.M, fg.N);
    std::vector<bool> occupied(static_cast<std::size_t>(ctx.frame.N_s()), false);
    for (const auto& u : users) {
      DDTapSet h = effective_channel_taps(ctx.filter, u.paths, ctx.slot_grid).taps;
      QuasiPeriodicSignal tx = build_slot_symbols(ctx.layout, ctx.slot_grid, ctx.codec.encode(u.payload),
                                                  snr.en.E_p, snr.en.E_d);
      // the same physical channel acts on every replica
      CMatrix rx = apply_channel_to_signal(h, tx).grid;
      for (int a : u.slots) {
        add_to_slot(frame_, a, ctx.frame, rx);
        occupied[a] = true;
      }
      true_taps_.push_back(std::move(h));
      contribution_energy_ += static_cast<double>(u.slots.size()) * rx.squaredNorm();
    }
    if (!ctx.cfg.noiseless)
      for (int a = 0; a < ctx.frame.N_s(); ++a)
        if (occupied[a]) {
          Rng rng = noise_stream(ctx, trial, a);
          add_to_slot(frame_, a, ctx.frame, ctx.noise->sample(rng, snr.en.N0));
        }
    decided_.resize(users.size());
    est_.resize(users.size());
  }

  bool try_decode(int u, int a) {
    const SlotLayout& L = ctx_.layout;
    SlotObservation obs{extract_slot(frame_, a, ctx_.frame), a};
    ChannelEstimate est = ctx_.cfg.genie ? genie_estimate(true_taps_[u])
                                         : restrict_to_support(estimate_cross_ambiguity(obs, L, ctx_.slot_grid, snr_.en.E_p),
                                                               L, ctx_.slot_grid, ctx_.filter, veh_a::kMaxDelay,
                                                               ctx_.cfg.nu_max);
    CMatrix s = mmse_equalize_doppler(est, L, ctx_.slot_grid,
                                      data_tile_without_pilot(obs.y_tile, est, L, ctx_.slot_grid, snr_.en.E_p),
                                      ctx_.R_blocks, snr_.en.E_d);
    s /= std::sqrt(snr_.en.E_d);
    std::vector<cd> v(static_cast<std::size_t>(L.data_symbols()));
    for (int k = 0; k < L.M_tile; ++k)
      for (int l = 0; l < L.N_tile; ++l) v[static_cast<std::size_t>(k * L.N_tile + l)] = s(k, l);
    auto payload = ctx_.codec.decode(v);
    if (!payload) return false;
    decided_[u] = std::move(payload);
    est_[u] = std::move(est);
    return true;
  }

  void cancel(int u, int, const std::vector<int>& slots) {
    QuasiPeriodicSignal tx = build_slot_symbols(ctx_.layout, ctx_.slot_grid, ctx_.codec.encode(*decided_[u]),
                                                snr_.en.E_p, snr_.en.E_d);
    CMatrix rec = reconstruct_user_signal(*est_[u], tx, ctx_.layout).grid;
    for (int a : slots) add_to_slot(frame_, a, ctx_.frame, rec, -1.0);
  }

  const CMatrix& frame() const { return frame_; }
  const std::vector<std::optional<Bits>>& decided() const { return decided_; }
  const std::vector<DDTapSet>& true_taps() const { return true_taps_; }
  double contribution_energy() const { return contribution_energy_; }

 private:
  const SimContext& ctx_;
  const SnrContext& snr_;
  CMatrix frame_;
  std::vector<DDTapSet> true_taps_;
  std::vector<std::optional<Bits>> decided_;
  std::vector<std::optional<ChannelEstimate>> est_;
  double contribution_energy_ = 0.0;
};

class OfdmFramePhy {
 public:
  OfdmFramePhy(const SimContext& ctx, const SnrContext& snr, const std::vector<TrialUser>& users, std::uint64_t trial)
      : ctx_(ctx), snr_(snr), est_(*snr.ofdm_est), obs_(static_cast<std::size_t>(ctx.frame.N_s())) {
    const OfdmConfig& oc = ctx.ofdm;
    for (const auto& u : users) {
      CMatrix X = est_.slot_grid(ctx.codec.encode(u.payload), snr.en.E_p, snr.en.E_d);
      auto taps = to_time_varying(u.paths, oc);
      for (int a : u.slots) {
        CMatrix Y = ofdm_slot_response(X, taps, oc, a);
        contribution_energy_ += Y.squaredNorm();
        if (obs_[a].size() == 0) obs_[a] = CMatrix::Zero(oc.M_sub, oc.N_ofdm);
        obs_[a] += Y;
      }
    }
    if (!ctx.cfg.noiseless)
      for (int a = 0; a < ctx.frame.N_s(); ++a)
        if (obs_[a].size() != 0) {
          Rng rng = noise_stream(ctx, trial, a);
          for (int n = 0; n < oc.N_ofdm; ++n)
            for (int m = 0; m < oc.M_sub; ++m) obs_[a](m, n) += complex_normal(rng, snr.en.N0);
        }
    decided_.resize(users.size());
    H_.resize(users.size());
  }

  bool try_decode(int u, int a) {
    CMatrix H = est_.estimate(obs_[a], snr_.en.E_p);
    auto payload = ctx_.codec.decode(est_.equalize(obs_[a], H, snr_.en.E_d, snr_.en.N0));
    if (!payload) return false;
    decided_[u] = std::move(payload);
    H_[u] = std::move(H);
    return true;
  }

  void cancel(int u, int a, const std::vector<int>& slots) {
    CMatrix X = est_.slot_grid(ctx_.codec.encode(*decided_[u]), snr_.en.E_p, snr_.en.E_d);
    for (int b : slots) {
      CMatrix Hb = est_.predict(H_[u], a, b);
      obs_[b] -= Hb.cwiseProduct(X);
    }
  }

  double residual_energy() const {
    double e = 0.0;
    for (const auto& o : obs_) e += o.squaredNorm();
    return e;
  }
  const std::vector<std::optional<Bits>>& decided() const { return decided_; }
  double contribution_energy() const { return contribution_energy_; }

 private:
  const SimContext& ctx_;
  const SnrContext& snr_;
  const OfdmEstimator& est_;
  std::vector<CMatrix> obs_;
  std::vector<std::optional<Bits>> decided_;
  std::vector<CMatrix> H_;
  double contribution_energy_ = 0.0;
};

inline FrameOutcome finish(DecodeLog log, const std::vector<std::optional<Bits>>& decided,
                           const std::vector<TrialUser>& users) {
  FrameOutcome out;
  out.success.assign(users.size(), false);
  for (std::size_t u = 0; u < users.size(); ++u)
    out.success[u] = log.decoded[u] && decided[u] && *decided[u] == users[u].payload;
  out.decided = decided;
  out.log = std::move(log);
  return out;
}

inline FrameOutcome simulate_frame(const SimContext& ctx, const SnrContext& snr, const std::vector<TrialUser>& users,
                                   std::uint64_t trial) {
  const auto sets = slot_sets(users);
  if (is_zak(ctx.cfg.modem)) {
    ZakFramePhy phy(ctx, snr, users, trial);
    DecodeLog log = run_sic_decoder(sets, ctx.frame.N_s(), phy, true);
    FrameOutcome o = finish(std::move(log), phy.decided(), users);
    o.residual_energy = phy.frame().squaredNorm();
    return o;
  }
  OfdmFramePhy phy(ctx, snr, users, trial);
  DecodeLog log = run_sic_decoder(sets, ctx.frame.N_s(), phy, ctx.cfg.modem == Modem::Ofdm);
  FrameOutcome o = finish(std::move(log), phy.decided(), users);
  o.residual_energy = phy.residual_energy();
  return o;
}

}  // namespace zakcra
