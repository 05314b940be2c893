// Acceptance run: one PASS/FAIL line per criterion P1..P10.
//   acceptance            all criteria
//   acceptance P4 P7      selected ones
// CSV results of the simulation criteria go to ./acceptance_results/.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "quadrature.hpp"
#include "zakcra/harness.hpp"

using namespace zakcra;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

int worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

const std::string kOutDir = "acceptance_results";

std::vector<ResultRow> run_and_save(ScenarioConfig c, const std::string& name) {
  c.threads = worker_count();
  auto rows = run_scenario(c, [](const ResultRow& r) {
    std::cerr << "    " << r.scenario << " " << r.modem << " " << r.x_name << "=" << detail::shortest(r.x_value)
              << " lost " << r.packets_lost << "/" << r.packets_sent << " (" << fmt(r.wallclock_s) << " s)\n";
  });
  std::filesystem::create_directories(kOutDir);
  export_csv(rows, kOutDir + "/" + name + ".csv");
  return rows;
}

const ResultRow& find_row(const std::vector<ResultRow>& rows, const std::string& scenario, double x) {
  for (const auto& r : rows)
    if (r.scenario == scenario && r.x_value == x) return r;
  throw std::runtime_error("acceptance: missing row " + scenario + " at " + detail::shortest(x));
}

DDTapSet random_taps(Rng& rng, int M, int N, int count, int span) {
  std::uniform_int_distribution<int> d(-span, span);
  std::vector<Tap> t;
  for (int i = 0; i < count; ++i) t.push_back({d(rng), d(rng), complex_normal(rng)});
  return DDTapSet::from_taps(M, N, t, 0.0);
}

QuasiPeriodicSignal random_signal(Rng& rng, const DDGridParams& g) {
  QuasiPeriodicSignal x = QuasiPeriodicSignal::zeros(g);
  for (int k = 0; k < g.M; ++k)
    for (int l = 0; l < g.N; ++l) x.grid(k, l) = complex_normal(rng);
  return x;
}

Verdict p1() {
  auto g = DDGridParams::make(8, 4, 1e3);
  Rng rng = derive_stream(1001, {});
  double err = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto a = random_taps(rng, 8, 4, 3, 3);
    auto b = random_taps(rng, 8, 4, 3, 3);
    auto c = random_taps(rng, 8, 4, 3, 3);
    const auto id = DDTapSet::delta(8, 4);
    err = std::max(err, max_abs_diff(twisted_convolve(id, a, g, 0.0), a));
    err = std::max(err, max_abs_diff(twisted_convolve(a, id, g, 0.0), a));
    err = std::max(err, max_abs_diff(twisted_convolve(twisted_convolve(a, b, g, 0.0), c, g, 0.0),
                                     twisted_convolve(a, twisted_convolve(b, c, g, 0.0), g, 0.0)));
    // point taps: δ(k1,l1) * δ(k2,l2) = e^{j2π l1 k2/(MN)} δ(k1+k2, l1+l2)
    std::uniform_int_distribution<int> d(-5, 5);
    const int k1 = d(rng), l1 = d(rng), k2 = d(rng), l2 = d(rng);
    auto p = twisted_convolve(DDTapSet::delta(8, 4, k1, l1), DDTapSet::delta(8, 4, k2, l2), g, 0.0);
    const cd want = std::polar(1.0, kTwoPi * l1 * k2 / static_cast<double>(g.MN()));
    err = std::max(err, std::abs(p.value(k1 + k2, l1 + l2) - want));
    err = std::max(err, std::abs(std::sqrt(p.energy()) - 1.0));
  }
  return {err < 1e-10, "twisted convolution identity/point rule/associativity, 100 draws: max err " + fmt(err) +
                           " (need < 1e-10)"};
}

Verdict p2() {
  Rng rng = derive_stream(1002, {});
  double err = 0.0;
  for (auto [M, N] : {std::pair{8, 4}, {6, 6}, {32, 16}}) {
    auto g = DDGridParams::make(M, N, 30e3);
    for (int it = 0; it < 5; ++it) {
      auto h = random_taps(rng, M, N, 6, 5);
      auto x = random_signal(rng, g);
      auto y = apply_channel_to_signal(h, x);
      for (int n = -2; n <= 2; ++n)
        for (int m = -2; m <= 2; ++m)
          for (int k = 0; k < M; ++k)
            for (int l = 0; l < N; ++l) {
              const cd rule = y.grid(k, l) * std::polar(1.0, kTwoPi * n * l / static_cast<double>(N));
              err = std::max(err, std::abs(channel_output_at(h, x, k + n * M, l + m * N) - rule));
            }
    }
  }
  return {err <= 1e-12, "channel output vs extension rule over (n,m) in [-2,2]^2: max err " + fmt(err) +
                            " (need <= 1e-12)"};
}

Verdict p3() {
  const auto t0 = std::chrono::steady_clock::now();
  const DDGridParams g = DDGridParams::make(32, 16, 30e3);
  auto ideal = effective_channel_taps(FilterSpec::sinc(), PathSet::single(), g);
  const double e00 = std::abs(ideal.taps.value(0, 0) - cd(1.0));
  double off = 0.0;
  for (const Tap& t : ideal.taps.taps())
    if (t.k != 0 || t.l != 0) off = std::max(off, std::abs(t.value));
  Rng rng = derive_stream(1003, {});
  const FilterSpec spec = FilterSpec::gaussian();
  double q = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto ps = sample_veh_a(rng, 815.0);
    const Path p = ps.paths[static_cast<std::size_t>(i % ps.paths.size())];
    auto h = effective_channel_taps(spec, PathSet{{p}}, g, 0.0);
    const int kc = static_cast<int>(std::lround(p.delay * g.bandwidth()));
    for (int dk = -1; dk <= 1; ++dk)
      for (int dl = -1; dl <= 1; ++dl)
        q = std::max(q, std::abs(h.taps.value(kc + dk, dl) - oracle::effective_channel_2d(spec, g, p, kc + dk, dl)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = e00 <= 1e-6 && off < 1e-9 && q < 1e-8 && secs < 30.0;
  return {ok, "sinc ideal |h(0,0)-1| " + fmt(e00) + ", max off-grid " + fmt(off) +
                  "; gaussian closed form vs quadrature on 20 Veh-A paths: " + fmt(q) + " (need 1e-6/1e-9/1e-8), " +
                  fmt(secs) + " s"};
}

Verdict p4() {
  const SlotLayout L = SlotLayout::make(16, 16);
  const DDGridParams g = L.slot_grid(30e3);
  const FilterSpec spec = FilterSpec::gaussian();
  const PacketCodec codec(CodecConfig::large());
  const auto R = doppler_noise_blocks(spec, g, L, 1.0);
  ScenarioConfig sc;
  const Energies en = modem_energies(sc, 25.0);  // frame budgets at 25 dB; nothing is added to the slot
  const double E_p = en.E_p, E_d = en.E_d;
  Rng rng = derive_stream(1004, {});
  double raw_err = 0.0, used_err = 0.0;
  long long bit_errors = 0, bad_trials = 0, packets_bad = 0;
  int slots = 0;
  while (slots < 200) {
    PathSet ps = sample_veh_a(rng, 815.0);
    if (!crystalline_check(ps, g)) continue;
    ++slots;
    const DDTapSet h = effective_channel_taps(spec, ps, g).taps;
    const Bits payload = random_payload(rng, codec.config().payload_bits());
    const auto syms = codec.encode(payload);
    QuasiPeriodicSignal y = apply_channel_to_signal(h, build_slot_symbols(L, g, syms, E_p, E_d));
    SlotObservation obs{y.grid, 0};
    ChannelEstimate raw = estimate_cross_ambiguity(obs, L, g, E_p);
    ChannelEstimate used = restrict_to_support(raw, L, g, spec, veh_a::kMaxDelay, 815.0);
    for (int k = -L.guard_k(); k <= L.guard_k(); ++k)
      for (int l = -L.guard_l(); l <= L.guard_l(); ++l) {
        raw_err = std::max(raw_err, std::abs(raw.taps.value(k, l) - h.value(k, l)));
        used_err = std::max(used_err, std::abs(used.taps.value(k, l) - h.value(k, l)));
      }
    CMatrix s = mmse_equalize_doppler(used, L, g, data_tile_without_pilot(y.grid, used, L, g, E_p), R, E_d);
    s /= std::sqrt(E_d);
    std::vector<cd> v(static_cast<std::size_t>(L.data_symbols()));
    for (int k = 0; k < L.M_tile; ++k)
      for (int l = 0; l < L.N_tile; ++l) v[static_cast<std::size_t>(k * L.N_tile + l)] = s(k, l);
    const Bits sent = qpsk_demap(syms), got = qpsk_demap(v);
    long long e = 0;
    for (std::size_t i = 0; i < sent.size(); ++i) e += sent[i] != got[i];
    bit_errors += e;
    bad_trials += e > 0;
    auto dec = codec.decode(v);
    packets_bad += !(dec && *dec == payload);
  }
  const bool ok = raw_err < 1e-6 && bit_errors == 0;
  return {ok, "200 noiseless 16x16 Veh-A slots: raw cross-ambiguity max tap err " + fmt(raw_err) +
                  " (need < 1e-6), after support restriction " + fmt(used_err) + "; coded-bit errors " +
                  std::to_string(bit_errors) + " in " + std::to_string(bad_trials) + " slots (need 0); packets lost " +
                  "after BCH " + std::to_string(packets_bad)};
}

Verdict p5() {
  Rng rng = derive_stream(1005, {});
  // exhaustive: every pattern of weight <= 3 on random (31,16) codewords
  const CodecConfig small = CodecConfig::small(), large = CodecConfig::large();
  const BchCode bs(small), bl(large);
  long long fails = 0, patterns = 0;
  std::vector<int> idx31(31), idx511(511);
  for (int round = 0; patterns < 10000; ++round) {
    const Bits m = random_payload(rng, small.k);
    const Bits c = bs.encode(m);
    for (int a = 0; a < 31; ++a)
      for (int b = a; b < 31; ++b)
        for (int d = b; d < 31; ++d) {
          Bits r = c;
          r[a] ^= 1u;
          if (b != a) r[b] ^= 1u;
          if (d != b) r[d] ^= 1u;
          auto res = bs.decode(r);
          fails += !(res.success && res.message == m);
          ++patterns;
        }
  }
  long long large_fail = 0;
  for (int it = 0; it < 1000; ++it) {
    const Bits m = random_payload(rng, large.k);
    Bits r = bl.encode(m);
    std::iota(idx511.begin(), idx511.end(), 0);
    std::shuffle(idx511.begin(), idx511.end(), rng);
    for (int j = 0; j < 31; ++j) r[idx511[j]] ^= 1u;
    auto res = bl.decode(r);
    large_fail += !(res.success && res.message == m);
  }
  long long chain_fail = 0;
  for (const auto& cfg : {small, large}) {
    PacketCodec pc(cfg);
    for (int it = 0; it < 200; ++it) {
      const Bits p = random_payload(rng, cfg.payload_bits());
      auto back = pc.decode(pc.encode(p));
      chain_fail += !(back && *back == p);
    }
  }
  // adversarial: t+1 errors through the full packet codec
  std::map<std::string, long long> miscorrect;
  for (const auto& [name, cfg] : {std::pair{std::string("31,16"), small}, {std::string("511,250"), large}}) {
    PacketCodec pc(cfg);
    const int n = cfg.n;
    std::vector<int> idx(static_cast<std::size_t>(n));
    long long bad = 0;
    for (int it = 0; it < 10000; ++it) {
      const Bits p = random_payload(rng, cfg.payload_bits());
      Bits r = pc.codeword(p);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int j = 0; j <= cfg.t; ++j) r[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] ^= 1u;
      auto res = pc.bch().decode(r);
      if (res.success && crc_check(res.message, cfg)) ++bad;
    }
    miscorrect[name] = bad;
  }
  const bool ok = fails == 0 && large_fail == 0 && chain_fail == 0 && miscorrect["31,16"] == 0 &&
                  miscorrect["511,250"] == 0;
  return {ok, "(31,16,3) weight<=3 patterns " + std::to_string(patterns) + ", failures " + std::to_string(fails) +
                  "; (511,250,31) 31-error samples 1000, failures " + std::to_string(large_fail) +
                  "; round trips failed " + std::to_string(chain_fail) +
                  "; CRC-passing miscorrections in 1e4 (t+1)-error trials: small " +
                  std::to_string(miscorrect["31,16"]) + ", large " + std::to_string(miscorrect["511,250"]) +
                  " (need 0)"};
}

Verdict p6() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c;
  c.scenario = Scenario::FrameLevel;
  c.modem = Modem::ZakGauss;
  c.genie = true;
  c.noiseless = true;
  c.seed = 6006;
  SimContext ctx(c);
  SnrContext snr(ctx, 25.0);
  std::string per_k;
  long long mismatched = 0;
  for (int K : {1, 5, 10, 20}) {
    long long bad = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
      GridPoint g{25.0, K, 0, {}};
      auto users = trial_users(ctx, g, t);
      auto o = simulate_frame(ctx, snr, users, t);
      bad += o.success != ideal_peeling_oracle(slot_sets(users), ctx.frame.N_s());
    }
    mismatched += bad;
    per_k += " K_a=" + std::to_string(K) + ":" + std::to_string(bad);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {mismatched == 0 && secs < 300.0, "genie noiseless 16x16 zak_gauss SIC vs peeling oracle, 200 trials each, "
                                           "mismatched trials" + per_k + "; " + fmt(secs) + " s (need 0, < 300 s)"};
}

Verdict p7() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c;
  c.scenario = Scenario::FrameLevel;
  c.snr_db = {25.0};
  c.K_a = {40, 60};
  c.trials = 2000;
  c.seed = 7007;
  c.modem = Modem::ZakGauss;
  auto gauss = run_and_save(c, "p7_zak_gauss");
  c.modem = Modem::ZakSinc;
  auto sinc = run_and_save(c, "p7_zak_sinc");
  c.modem = Modem::OfdmNoSic;
  c.K_a = {40};
  auto nosic = run_and_save(c, "p7_ofdm_nosic");
  const double g40 = find_row(gauss, "frame_level", 40).plr, g60 = find_row(gauss, "frame_level", 60).plr;
  const double s40 = find_row(sinc, "frame_level", 40).plr, s60 = find_row(sinc, "frame_level", 60).plr;
  const double n40 = find_row(nosic, "frame_level", 40).plr;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool a = g40 <= 1e-2;
  const bool b = g40 <= s40 && g60 <= s60;
  // with a zero Gaussian count the ratio is unbounded; any positive baseline PLR satisfies it then
  const bool cc = g40 == 0.0 ? n40 > 0.0 : n40 >= 10.0 * g40;
  return {a && b && cc && secs <= 7200.0,
          "2000 frames, 25 dB: (a) zak_gauss K_a=40 " + detail::sci6(g40) + (a ? " ok" : " FAIL") +
              "; (b) gauss<=sinc at 40: " + detail::sci6(g40) + "<=" + detail::sci6(s40) + ", at 60: " +
              detail::sci6(g60) + "<=" + detail::sci6(s60) + (b ? " ok" : " FAIL") + "; (c) ofdm_nosic K_a=40 " +
              detail::sci6(n40) + " >= 10x gauss" + (cc ? " ok" : " FAIL") + "; " + fmt(secs) + " s"};
}

Verdict p8() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c;
  c.scenario = Scenario::TwoUserToy;
  c.snr_db = parse_grid<double>("0:30:5");
  c.delta = {1, 2};
  c.trials = 1000;
  c.seed = 8008;
  c.M_tile = c.N_tile = 4;
  c.modem = Modem::Ofdm;
  auto small = run_and_save(c, "p8_ofdm_4x4");
  c.M_tile = c.N_tile = 16;
  auto big = run_and_save(c, "p8_ofdm_16x16");
  c.modem = Modem::ZakGauss;
  c.delta = {1};
  auto zak = run_and_save(c, "p8_zak_gauss_16x16");
  std::string mono, sat, zk;
  bool ok_mono = true, ok_sat = true, ok_zak = true;
  for (double s : c.snr_db) {
    const double d1 = find_row(small, "two_user_toy:collided:delta=1", s).plr;
    const double d2 = find_row(small, "two_user_toy:collided:delta=2", s).plr;
    ok_mono &= d1 <= d2;
    mono += " " + detail::shortest(s) + "dB:" + fmt(d1) + "/" + fmt(d2);
    if (s < 10.0) continue;
    const double o1 = find_row(big, "two_user_toy:collided:delta=1", s).plr;
    ok_sat &= o1 > 0.5;
    sat += " " + detail::shortest(s) + "dB:" + fmt(o1);
    const double zc = find_row(zak, "two_user_toy:collided:delta=1", s).plr;
    const double zu = find_row(zak, "two_user_toy:uncollided:delta=1", s).plr;
    ok_zak &= zc <= 2.0 * zu;
    zk += " " + detail::shortest(s) + "dB:" + fmt(zc) + "/" + fmt(zu);
  }
  const double zc0 = find_row(zak, "two_user_toy:collided:delta=1", 0.0).plr;
  const double zu0 = find_row(zak, "two_user_toy:uncollided:delta=1", 0.0).plr;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok_mono && ok_sat && ok_zak && secs <= 1800.0,
          "1000 trials: OFDM 4x4 collided delta1/delta2" + mono + (ok_mono ? " ok" : " FAIL") +
              "; OFDM 16x16 collided delta=1 (>0.5)" + sat + (ok_sat ? " ok" : " FAIL") +
              "; zak_gauss 16x16 collided/uncollided (<=2x)" + zk + (ok_zak ? " ok" : " FAIL") + " [0dB: " +
              fmt(zc0) + "/" + fmt(zu0) + "]; " + fmt(secs) + " s"};
}

Verdict p9() {
  ScenarioConfig c;
  c.scenario = Scenario::SingleUser;
  c.trials = 2000;
  c.seed = 9009;
  c.modem = Modem::ZakGauss;
  c.snr_db = {20.0};
  c.nu_p = 30e3;
  auto z30 = run_and_save(c, "p9_zak_gauss_30k");
  c.nu_p = 5e3;
  auto z5 = run_and_save(c, "p9_zak_gauss_5k");
  c.modem = Modem::Ofdm;
  c.snr_db = parse_grid<double>("0:30:5");
  auto o5 = run_and_save(c, "p9_ofdm_5k");
  const double a = find_row(z30, "single_user", 20.0).plr, b = find_row(z5, "single_user", 20.0).plr;
  // both zero means no measurable change
  const bool ok_z = (a == 0.0 && b == 0.0) || (a > 0.0 && b > 0.0 && std::max(a, b) < 3.0 * std::min(a, b));
  // floor: the high-SNR end of the curve
  double floor = 1.0;
  std::string curve;
  for (const auto& r : o5) {
    curve += " " + detail::shortest(r.x_value) + "dB:" + fmt(r.plr);
    if (r.x_value >= 20.0) floor = std::min(floor, r.plr);
  }
  const bool ok_o = floor >= 1e-2;
  return {ok_z && ok_o, "2000 trials: zak_gauss 20 dB PLR at 30 kHz " + detail::sci6(a) + ", at 5 kHz " +
                            detail::sci6(b) + (ok_z ? " (within 3x)" : " (FAIL, not within 3x)") +
                            "; OFDM 5 kHz" + curve + ", floor over >=20 dB " + fmt(floor) +
                            (ok_o ? " ok" : " (FAIL, need >= 1e-2)")};
}

Verdict p10() {
  std::vector<ScenarioConfig> cfgs;
  ScenarioConfig f;
  f.scenario = Scenario::FrameLevel;
  f.modem = Modem::ZakGauss;
  f.M_tile = f.N_tile = 4;
  f.snr_db = {5.0, 15.0};
  f.K_a = {20, 40};
  f.trials = 40;
  f.seed = 1010;
  cfgs.push_back(f);
  f.modem = Modem::Ofdm;
  cfgs.push_back(f);
  ScenarioConfig t;
  t.scenario = Scenario::TwoUserToy;
  t.modem = Modem::ZakSinc;
  t.M_tile = t.N_tile = 4;
  t.snr_db = {0.0, 10.0};
  t.delta = {1, 3};
  t.trials = 50;
  t.seed = 1011;
  cfgs.push_back(t);
  t.scenario = Scenario::SingleUser;
  t.modem = Modem::OfdmNoSic;
  cfgs.push_back(t);
  int identical = 0;
  for (ScenarioConfig c : cfgs) {
    c.threads = 1;
    const std::string ref = to_csv(run_scenario(c));
    bool same = true;
    for (int w : {2, 3, 8}) {
      c.threads = w;
      same &= to_csv(run_scenario(c)) == ref;
    }
    identical += same;
  }
  return {identical == static_cast<int>(cfgs.size()),
          std::to_string(identical) + "/" + std::to_string(cfgs.size()) +
              " scenarios byte-identical across 1, 2, 3 and 8 workers"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> all{
      {"P1", p1}, {"P2", p2}, {"P3", p3}, {"P4", p4}, {"P5", p5},
      {"P6", p6}, {"P7", p7}, {"P8", p8}, {"P9", p9}, {"P10", p10}};
  std::vector<std::string> want(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, fn] : all) {
    if (!want.empty() && std::find(want.begin(), want.end(), name) == want.end()) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << name << (v.pass ? " PASS " : " FAIL ") << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
