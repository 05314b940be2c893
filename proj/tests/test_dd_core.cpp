#include <gtest/gtest.h>

#include <random>

#include "zakcra/dd_core.hpp"
#include "zakcra/rng.hpp"

using namespace zakcra;

namespace {

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

// brute force over a bounding box of keys
DDTapSet brute_twisted(const DDTapSet& a, const DDTapSet& b, const DDGridParams& g) {
  std::vector<Tap> out;
  for (int k = -40; k <= 40; ++k)
    for (int l = -40; l <= 40; ++l) {
      cd acc{};
      for (int kp = -20; kp <= 20; ++kp)
        for (int lp = -20; lp <= 20; ++lp) {
          const cd av = a.value(kp, lp);
          if (av == cd{}) continue;
          const cd bv = b.value(k - kp, l - lp);
          if (bv == cd{}) continue;
          acc += av * bv * std::polar(1.0, kTwoPi * lp * (k - kp) / static_cast<double>(g.MN()));
        }
      if (acc != cd{}) out.push_back({k, l, acc});
    }
  return DDTapSet::from_taps(g.M, g.N, out, 0.0);
}

}  // namespace

TEST(DDGrid, Invariants) {
  auto g = DDGridParams::make(32, 16, 30e3);
  EXPECT_NEAR(g.tau_p * g.nu_p, 1.0, 1e-12);
  EXPECT_NEAR(g.bandwidth() * g.duration(), 32.0 * 16.0, 1e-9);
  EXPECT_THROW(DDGridParams::make(0, 4, 1e3), std::invalid_argument);
  EXPECT_THROW((DDGridParams{4, 4, 1e3, 2e-3}.validate()), std::invalid_argument);
}

TEST(QpExtend, Examples) {
  auto g = DDGridParams::make(2, 2, 1e3);
  auto x = QuasiPeriodicSignal::zeros(g);
  x.grid(0, 0) = 1.0;
  EXPECT_NEAR(std::abs(qp_extend(x, 2, 0) - cd(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(qp_extend(x, 0, 2) - cd(1.0)), 0.0, 1e-15);
  auto y = QuasiPeriodicSignal::zeros(g);
  y.grid(0, 1) = 1.0;
  EXPECT_NEAR(std::abs(qp_extend(y, 2, 1) - cd(-1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(qp_extend(y, -2, 1) - cd(-1.0)), 0.0, 1e-15);
}

TEST(Twisted, IdentityAndPointRule) {
  auto g = DDGridParams::make(8, 8, 1e3);
  Rng rng = derive_stream(1, {});
  auto b = random_taps(rng, 8, 8, 6, 3);
  auto id = DDTapSet::delta(8, 8);
  EXPECT_LT(max_abs_diff(twisted_convolve(id, b, g), b), 1e-14);
  EXPECT_LT(max_abs_diff(twisted_convolve(b, id, g), b), 1e-14);

  auto p = twisted_convolve(DDTapSet::delta(8, 8, 2, 3), DDTapSet::delta(8, 8, 5, -1), g);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.taps()[0].k, 7);
  EXPECT_EQ(p.taps()[0].l, 2);
  EXPECT_NEAR(std::abs(p.taps()[0].value - std::polar(1.0, kTwoPi * 3 * 5 / 64.0)), 0.0, 1e-14);
}

TEST(Twisted, MatchesBruteForce) {
  auto g = DDGridParams::make(8, 8, 1e3);
  Rng rng = derive_stream(2, {});
  for (int i = 0; i < 10; ++i) {
    auto a = random_taps(rng, 8, 8, 4, 5);
    auto b = random_taps(rng, 8, 8, 4, 5);
    EXPECT_LT(max_abs_diff(twisted_convolve(a, b, g, 0.0), brute_twisted(a, b, g)), 1e-12);
  }
}

TEST(Twisted, AssociativeNotCommutative) {
  auto g = DDGridParams::make(8, 4, 1e3);
  Rng rng = derive_stream(3, {});
  for (int i = 0; i < 100; ++i) {
    auto a = random_taps(rng, 8, 4, 3, 3);
    auto b = random_taps(rng, 8, 4, 3, 3);
    auto c = random_taps(rng, 8, 4, 3, 3);
    auto l = twisted_convolve(twisted_convolve(a, b, g, 0.0), c, g, 0.0);
    auto r = twisted_convolve(a, twisted_convolve(b, c, g, 0.0), g, 0.0);
    EXPECT_LT(max_abs_diff(l, r), 1e-10);
  }
  auto a = DDTapSet::delta(8, 4, 1, 0);
  auto b = DDTapSet::delta(8, 4, 0, 1);
  EXPECT_GT(max_abs_diff(twisted_convolve(a, b, g), twisted_convolve(b, a, g)), 0.1);
}

TEST(Twisted, LatticeMismatchThrows) {
  auto g = DDGridParams::make(8, 8, 1e3);
  EXPECT_THROW(twisted_convolve(DDTapSet::delta(8, 8), DDTapSet::delta(4, 8), g), std::invalid_argument);
}

TEST(TapSet, MergeAndPrune) {
  auto s = DDTapSet::from_taps(4, 4, {{0, 0, 1.0}, {0, 0, 1.0}, {1, 1, 1e-9}, {2, 0, 0.5}});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_NEAR(std::abs(s.value(0, 0) - cd(2.0)), 0.0, 1e-15);
  EXPECT_EQ(s.value(1, 1), cd{});
}

TEST(Channel, Examples) {
  auto g = DDGridParams::make(4, 4, 1e3);
  auto x = QuasiPeriodicSignal::zeros(g);
  x.grid(0, 0) = 1.0;
  auto y = apply_channel_to_signal(DDTapSet::delta(4, 4, 1, 0), x);
  EXPECT_NEAR(std::abs(y.grid(1, 0) - cd(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(y.energy(), 1.0, 1e-15);

  // Doppler tap on an input at delay 2: phase e^{j2π l k'/(MN)}
  auto x2 = QuasiPeriodicSignal::zeros(g);
  x2.grid(2, 0) = 1.0;
  auto y2 = apply_channel_to_signal(DDTapSet::delta(4, 4, 0, 1), x2);
  EXPECT_NEAR(std::abs(y2.grid(2, 1) - std::polar(1.0, kTwoPi * 2 / 16.0)), 0.0, 1e-15);

  Rng rng = derive_stream(4, {});
  auto xr = random_signal(rng, g);
  EXPECT_LT((apply_channel_to_signal(DDTapSet::delta(4, 4), xr).grid - xr.grid).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Channel, ScatterMatchesDirectSum) {
  auto g = DDGridParams::make(6, 4, 1e3);
  Rng rng = derive_stream(5, {});
  for (int it = 0; it < 10; ++it) {
    auto h = random_taps(rng, 6, 4, 8, 9);
    auto x = random_signal(rng, g);
    auto y = apply_channel_to_signal(h, x);
    for (int k = 0; k < 6; ++k)
      for (int l = 0; l < 4; ++l) EXPECT_LT(std::abs(y.grid(k, l) - channel_output_at(h, x, k, l)), 1e-12);
  }
}

TEST(Channel, QuasiPeriodicClosure) {
  auto g = DDGridParams::make(8, 4, 1e3);
  Rng rng = derive_stream(6, {});
  for (int it = 0; it < 20; ++it) {
    auto h = random_taps(rng, 8, 4, 6, 6);
    auto x = random_signal(rng, g);
    auto y = apply_channel_to_signal(h, x);
    for (int n = -2; n <= 2; ++n)
      for (int m = -2; m <= 2; ++m)
        for (int k = 0; k < 8; ++k)
          for (int l = 0; l < 4; ++l) {
            const cd direct = channel_output_at(h, x, k + n * 8, l + m * 4);
            const cd rule = y.grid(k, l) * std::polar(1.0, kTwoPi * n * l / 4.0);
            EXPECT_LT(std::abs(direct - rule), 1e-12);
            EXPECT_LT(std::abs(qp_extend(y, k + n * 8, l + m * 4) - rule), 1e-12);
          }
  }
}

TEST(Channel, Linearity) {
  auto g = DDGridParams::make(8, 4, 1e3);
  Rng rng = derive_stream(7, {});
  auto h1 = random_taps(rng, 8, 4, 5, 4);
  auto h2 = random_taps(rng, 8, 4, 5, 4);
  auto x1 = random_signal(rng, g);
  auto x2 = random_signal(rng, g);
  const cd a(0.3, -1.2);
  QuasiPeriodicSignal xs(x1.grid * a + x2.grid, g);
  CMatrix lhs = apply_channel_to_signal(h1, xs).grid;
  CMatrix rhs = apply_channel_to_signal(h1, x1).grid * a + apply_channel_to_signal(h1, x2).grid;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  std::vector<Tap> sum = h1.taps();
  for (const Tap& t : h2.taps()) sum.push_back(t);
  auto hs = DDTapSet::from_taps(8, 4, sum, 0.0);
  CMatrix lh = apply_channel_to_signal(hs, x1).grid;
  CMatrix rh = apply_channel_to_signal(h1, x1).grid + apply_channel_to_signal(h2, x1).grid;
  EXPECT_LT((lh - rh).cwiseAbs().maxCoeff(), 1e-12);
}
