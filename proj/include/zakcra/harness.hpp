#pragma once

// Scenario orchestration: grid points, per-trial user geometry, a bounded
// worker pool over trials and PLR aggregation.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "zakcra/frame_sim.hpp"
#include "zakcra/scenario.hpp"

namespace zakcra {

/// The rows one grid point produces, and how a trial's outcome maps onto them.
struct GridPoint {
  double snr_db = 0.0;
  int K_a = 1;
  int delta = 0;
  std::vector<ResultRow> rows;
};

inline ResultRow base_row(const ScenarioConfig& c) {
  ResultRow r;
  r.modem = to_string(c.modem);
  r.filter = c.filter_name();
  r.M_tile = c.M_tile;
  r.N_tile = c.N_tile;
  r.nu_p_hz = c.nu_p;
  r.nu_max_hz = c.nu_max;
  r.N_s = c.N_s();
  r.trials = c.trials;
  r.seed = c.seed;
  return r;
}

inline std::vector<GridPoint> grid_points(const ScenarioConfig& c) {
  std::vector<GridPoint> pts;
  const ResultRow b = base_row(c);
  switch (c.scenario) {
    case Scenario::SingleUser:
      for (double s : c.snr_db) {
        GridPoint g{s, 1, 0, {b}};
        g.rows[0].scenario = "single_user";
        g.rows[0].r = 1;
        g.rows[0].x_name = "snr_db";
        g.rows[0].x_value = s;
        pts.push_back(std::move(g));
      }
      break;
    case Scenario::TwoUserToy:
      for (int d : c.delta)
        for (double s : c.snr_db) {
          GridPoint g{s, 2, d, {b, b}};
          const std::string tag = ":delta=" + std::to_string(d);
          g.rows[0].scenario = "two_user_toy:uncollided" + tag;
          g.rows[0].r = 2;
          g.rows[1].scenario = "two_user_toy:collided" + tag;
          g.rows[1].r = 1;
          for (auto& r : g.rows) {
            r.x_name = "snr_db";
            r.x_value = s;
          }
          pts.push_back(std::move(g));
        }
      break;
    case Scenario::FrameLevel:
      for (double s : c.snr_db)
        for (int k : c.K_a) {
          GridPoint g{s, k, 0, {b}};
          g.rows[0].scenario = c.snr_db.size() == 1 ? "frame_level" : "frame_level:snr_db=" + detail::shortest(s);
          g.rows[0].r = c.r;
          g.rows[0].x_name = "K_a";
          g.rows[0].x_value = k;
          pts.push_back(std::move(g));
        }
      break;
  }
  return pts;
}

/// Users of one trial at a grid point. Toy: A owns {0, δ}, B owns {δ}.
inline std::vector<TrialUser> trial_users(const SimContext& ctx, const GridPoint& g, std::uint64_t trial) {
  std::vector<TrialUser> users;
  switch (ctx.cfg.scenario) {
    case Scenario::SingleUser:
      users.push_back(draw_user(ctx, trial, 0, {0}));
      break;
    case Scenario::TwoUserToy:
      users.push_back(draw_user(ctx, trial, 0, {0, g.delta}));
      users.push_back(draw_user(ctx, trial, 1, {g.delta}));
      break;
    case Scenario::FrameLevel:
      for (int u = 0; u < g.K_a; ++u) users.push_back(draw_user(ctx, trial, u, draw_slots(ctx, trial, u, ctx.cfg.r)));
      break;
  }
  return users;
}

/// Lost packets per row of the grid point.
inline std::vector<long long> count_losses(const ScenarioConfig& c, const FrameOutcome& o) {
  if (c.scenario == Scenario::TwoUserToy) return {o.success[0] ? 0 : 1, o.success[1] ? 0 : 1};
  long long lost = 0;
  for (bool s : o.success) lost += !s;
  return {lost};
}

using ProgressFn = std::function<void(const ResultRow&)>;

inline std::vector<ResultRow> run_scenario(const ScenarioConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const SimContext ctx(cfg);
  std::vector<ResultRow> out;
  for (GridPoint& g : grid_points(cfg)) {
    const auto t0 = std::chrono::steady_clock::now();
    const SnrContext snr(ctx, g.snr_db);
    const std::size_t R = g.rows.size();
    std::atomic<long long> next{0};
    std::vector<std::vector<long long>> lost(static_cast<std::size_t>(cfg.threads), std::vector<long long>(R, 0));
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&](int w) {
      try {
        for (;;) {
          const long long t = next.fetch_add(1);
          if (t >= cfg.trials) break;
          const auto users = trial_users(ctx, g, static_cast<std::uint64_t>(t));
          const auto l = count_losses(cfg, simulate_frame(ctx, snr, users, static_cast<std::uint64_t>(t)));
          for (std::size_t i = 0; i < R; ++i) lost[w][i] += l[i];
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(cfg.trials);
      }
    };
    if (cfg.threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < cfg.threads; ++w) pool.emplace_back(worker, w);
      for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t i = 0; i < R; ++i) {
      ResultRow r = g.rows[i];
      const long long per_trial = cfg.scenario == Scenario::FrameLevel ? g.K_a : 1;
      r.packets_sent = cfg.trials * per_trial;
      for (const auto& v : lost) r.packets_lost += v[i];
      finalize(r);
      r.wallclock_s = secs;
      if (progress) progress(r);
      out.push_back(std::move(r));
    }
  }
  // toy rows come out grouped per (delta, snr); reorder to one series per role
  if (cfg.scenario == Scenario::TwoUserToy) {
    std::vector<std::string> order;
    for (const auto& r : out)
      if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
    auto rank = [&](const ResultRow& r) { return std::find(order.begin(), order.end(), r.scenario) - order.begin(); };
    std::stable_sort(out.begin(), out.end(), [&](const ResultRow& a, const ResultRow& b) { return rank(a) < rank(b); });
  }
  return out;
}

}  // namespace zakcra
