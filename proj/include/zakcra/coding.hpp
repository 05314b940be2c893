#pragma once

// CRC + narrow-sense binary BCH + single pad bit + QPSK.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "zakcra/dd_core.hpp"

namespace zakcra {

using Bits = std::vector<std::uint8_t>;

enum class CodeVariant { Small, Large };

struct CodecConfig {
  CodeVariant variant = CodeVariant::Small;
  int m = 5;             // field GF(2^m)
  unsigned prim = 0x25;  // primitive polynomial including x^m
  int n = 31;
  int k = 16;
  int t = 3;
  int crc_bits = 4;
  unsigned crc_poly = 0x3;  // without the leading x^w term

  // x^5 + x^2 + 1, CRC x^4 + x + 1
  static CodecConfig small() { return {CodeVariant::Small, 5, 0x25, 31, 16, 3, 4, 0x3}; }
  // x^9 + x^4 + 1, CRC-8 0x07. With t = 31 the generator has degree 261.
  static CodecConfig large() { return {CodeVariant::Large, 9, 0x211, 511, 250, 31, 8, 0x07}; }

  int payload_bits() const { return k - crc_bits; }
  int symbols() const { return (n + 1) / 2; }
};

// ---- CRC --------------------------------------------------------------

/// MSB-first shift register, zero init, no reflection, no final xor.
inline unsigned crc_remainder(const Bits& bits, int width, unsigned poly) {
  const unsigned mask = (1u << width) - 1u;
  unsigned reg = 0;
  for (std::uint8_t b : bits) {
    const unsigned fb = ((reg >> (width - 1)) & 1u) ^ (b & 1u);
    reg = (reg << 1) & mask;
    if (fb) reg ^= poly;
  }
  return reg;
}

inline Bits crc_attach(const Bits& payload, const CodecConfig& cfg) {
  if (static_cast<int>(payload.size()) != cfg.payload_bits())
    throw std::invalid_argument("crc_attach: payload has " + std::to_string(payload.size()) + " bits, expected " +
                                std::to_string(cfg.payload_bits()));
  Bits msg = payload;
  const unsigned r = crc_remainder(payload, cfg.crc_bits, cfg.crc_poly);
  for (int i = cfg.crc_bits - 1; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>((r >> i) & 1u));
  return msg;
}

inline bool crc_check(const Bits& message, const CodecConfig& cfg) {
  if (static_cast<int>(message.size()) != cfg.k)
    throw std::invalid_argument("crc_check: message has " + std::to_string(message.size()) + " bits, expected " +
                                std::to_string(cfg.k));
  return crc_remainder(message, cfg.crc_bits, cfg.crc_poly) == 0;
}

// ---- GF(2^m) and BCH --------------------------------------------------

class GaloisField {
 public:
  GaloisField(int m, unsigned prim) : m_(m), q1_((1 << m) - 1), exp_(2 * ((1 << m) - 1)), log_(1 << m, -1) {
    unsigned x = 1;
    for (int i = 0; i < q1_; ++i) {
      exp_[i] = static_cast<int>(x);
      if (log_[x] != -1) throw std::invalid_argument("GaloisField: polynomial is not primitive");
      log_[x] = i;
      x <<= 1;
      if (x & (1u << m)) x ^= prim;
    }
    for (int i = q1_; i < 2 * q1_; ++i) exp_[i] = exp_[i - q1_];
  }

  int order() const { return q1_; }
  int alpha_pow(long long e) const { return exp_[pos_mod(e, q1_)]; }
  int mul(int a, int b) const { return (a == 0 || b == 0) ? 0 : exp_[log_[a] + log_[b]]; }
  int div(int a, int b) const {
    if (b == 0) throw std::domain_error("GaloisField: division by zero");
    return a == 0 ? 0 : exp_[log_[a] - log_[b] + q1_];
  }
  int log(int a) const { return log_[a]; }

 private:
  int m_;
  int q1_;
  std::vector<int> exp_;
  std::vector<int> log_;
};

class BchCode {
 public:
  struct DecodeResult {
    Bits message;
    bool success = false;
    int corrected = 0;
  };

  explicit BchCode(const CodecConfig& cfg) : cfg_(cfg), gf_(cfg.m, cfg.prim) {
    if (cfg.n != gf_.order()) throw std::invalid_argument("BchCode: n must be 2^m - 1");
    // g(x) = lcm of minimal polynomials of alpha^1 .. alpha^2t
    std::vector<int> g{1};
    std::set<int> used;
    for (int i = 1; i <= 2 * cfg.t; ++i) {
      if (used.count(i)) continue;
      std::vector<int> poly{1};
      int j = i;
      do {
        used.insert(j);
        // poly *= (x + alpha^j)
        const int r = gf_.alpha_pow(j);
        std::vector<int> next(poly.size() + 1, 0);
        for (std::size_t a = 0; a < poly.size(); ++a) {
          next[a + 1] ^= poly[a];
          next[a] ^= gf_.mul(poly[a], r);
        }
        poly = std::move(next);
        j = static_cast<int>((2LL * j) % cfg.n);
      } while (j != i);
      std::vector<int> prod(g.size() + poly.size() - 1, 0);
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < poly.size(); ++b) prod[a + b] ^= gf_.mul(g[a], poly[b]);
      g = std::move(prod);
    }
    gen_.assign(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] > 1) throw std::logic_error("BchCode: generator has non-binary coefficient");
      gen_[i] = static_cast<std::uint8_t>(g[i]);
    }
    const int k = cfg.n - static_cast<int>(gen_.size() - 1);
    if (k != cfg.k)
      throw std::invalid_argument("BchCode: (" + std::to_string(cfg.n) + ", t=" + std::to_string(cfg.t) +
                                  ") has k = " + std::to_string(k) + ", config says " + std::to_string(cfg.k));
  }

  const CodecConfig& config() const { return cfg_; }
  const Bits& generator() const { return gen_; }
  const GaloisField& field() const { return gf_; }

  /// Systematic: parity in c[0, n-k), message in c[n-k, n), c[i] the
  /// coefficient of x^i.
  Bits encode(const Bits& message) const {
    if (static_cast<int>(message.size()) != cfg_.k)
      throw std::invalid_argument("bch_encode: message length mismatch");
    const int nk = cfg_.n - cfg_.k;
    Bits c(cfg_.n, 0);
    for (int i = 0; i < cfg_.k; ++i) c[nk + i] = message[i] & 1u;
    Bits rem(c);
    for (int i = cfg_.n - 1; i >= nk; --i) {
      if (!rem[i]) continue;
      for (int j = 0; j <= nk; ++j) rem[i - nk + j] ^= gen_[j];
    }
    for (int i = 0; i < nk; ++i) c[i] = rem[i];
    return c;
  }

  std::vector<int> syndromes(const Bits& r) const {
    std::vector<int> S(2 * cfg_.t, 0);
    for (int j = 1; j <= 2 * cfg_.t; ++j) {
      int s = 0;
      for (int i = 0; i < cfg_.n; ++i)
        if (r[i]) s ^= gf_.alpha_pow(static_cast<long long>(i) * j);
      S[j - 1] = s;
    }
    return S;
  }

  /// Berlekamp-Massey + Chien search. Fails when the locator's root count
  /// disagrees with its degree or the corrected word is not a codeword.
  DecodeResult decode(const Bits& received) const {
    if (static_cast<int>(received.size()) != cfg_.n) throw std::invalid_argument("bch_decode: length mismatch");
    const int nk = cfg_.n - cfg_.k;
    DecodeResult res;
    Bits r = received;
    const std::vector<int> S = syndromes(r);
    bool clean = true;
    for (int s : S) clean = clean && s == 0;
    if (!clean) {
      std::vector<int> C{1}, B{1};
      int L = 0, shift = 1, b = 1;
      for (int n = 0; n < 2 * cfg_.t; ++n) {
        int d = S[n];
        for (int i = 1; i <= L && i < static_cast<int>(C.size()); ++i) d ^= gf_.mul(C[i], S[n - i]);
        if (d == 0) {
          ++shift;
          continue;
        }
        std::vector<int> T = C;
        const int coef = gf_.div(d, b);
        if (C.size() < B.size() + shift) C.resize(B.size() + shift, 0);
        for (std::size_t i = 0; i < B.size(); ++i) C[i + shift] ^= gf_.mul(coef, B[i]);
        if (2 * L <= n) {
          L = n + 1 - L;
          B = std::move(T);
          b = d;
          shift = 1;
        } else {
          ++shift;
        }
      }
      while (C.size() > 1 && C.back() == 0) C.pop_back();
      const int deg = static_cast<int>(C.size()) - 1;
      if (deg != L || L > cfg_.t) return res;
      std::vector<int> pos;
      for (int i = 0; i < cfg_.n; ++i) {
        int v = 0;
        for (int j = 0; j <= deg; ++j)
          if (C[j]) v ^= gf_.mul(C[j], gf_.alpha_pow(-static_cast<long long>(i) * j));
        if (v == 0) pos.push_back(i);
      }
      if (static_cast<int>(pos.size()) != deg) return res;
      for (int i : pos) r[i] ^= 1u;
      for (int s : syndromes(r))
        if (s != 0) return res;
      res.corrected = deg;
    }
    res.message.assign(r.begin() + nk, r.end());
    res.success = true;
    return res;
  }

 private:
  CodecConfig cfg_;
  GaloisField gf_;
  Bits gen_;
};

// ---- QPSK -------------------------------------------------------------

/// (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / √2
inline std::vector<cd> qpsk_map(const Bits& bits) {
  if (bits.size() % 2) throw std::invalid_argument("qpsk_map: odd bit count");
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<cd> out(bits.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {s * (1.0 - 2.0 * (bits[2 * i] & 1u)), s * (1.0 - 2.0 * (bits[2 * i + 1] & 1u))};
  return out;
}

template <class Container>
Bits qpsk_demap(const Container& est) {
  Bits out;
  out.reserve(2 * static_cast<std::size_t>(est.size()));
  for (const cd& z : est) {
    out.push_back(z.real() < 0.0 ? 1 : 0);
    out.push_back(z.imag() < 0.0 ? 1 : 0);
  }
  return out;
}

inline std::vector<cd> qpsk_decide(const std::vector<cd>& est) { return qpsk_map(qpsk_demap(est)); }

// ---- full chain ---------------------------------------------------------

class PacketCodec {
 public:
  explicit PacketCodec(const CodecConfig& cfg) : bch_(cfg) {}

  const CodecConfig& config() const { return bch_.config(); }
  const BchCode& bch() const { return bch_; }

  Bits codeword(const Bits& payload) const { return bch_.encode(crc_attach(payload, config())); }

  /// payload -> CRC -> BCH -> pad 0 -> QPSK
  std::vector<cd> encode(const Bits& payload) const {
    Bits c = codeword(payload);
    c.push_back(0);
    return qpsk_map(c);
  }

  /// Hard decisions -> payload if BCH succeeds and the CRC verifies.
  std::optional<Bits> decode(const std::vector<cd>& est) const {
    if (static_cast<int>(est.size()) != config().symbols())
      throw std::invalid_argument("PacketCodec::decode: symbol count mismatch");
    Bits bits = qpsk_demap(est);
    bits.pop_back();
    BchCode::DecodeResult r = bch_.decode(bits);
    if (!r.success || !crc_check(r.message, config())) return std::nullopt;
    r.message.resize(static_cast<std::size_t>(config().payload_bits()));
    return r.message;
  }

 private:
  BchCode bch_;
};

}  // namespace zakcra
