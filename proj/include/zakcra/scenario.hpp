#pragma once

// Scenario configuration, SNR bookkeeping, result rows and the CSV schema.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "zakcra/cra_mac.hpp"
#include "zakcra/pulses.hpp"
#include "zakcra/slot_layout.hpp"

namespace zakcra {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scenario { SingleUser, TwoUserToy, FrameLevel };
enum class Modem { ZakSinc, ZakGauss, Ofdm, OfdmNoSic };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::SingleUser: return "single_user";
    case Scenario::TwoUserToy: return "two_user_toy";
    case Scenario::FrameLevel: return "frame_level";
  }
  return "?";
}

inline std::string to_string(Modem m) {
  switch (m) {
    case Modem::ZakSinc: return "zak_sinc";
    case Modem::ZakGauss: return "zak_gauss";
    case Modem::Ofdm: return "ofdm";
    case Modem::OfdmNoSic: return "ofdm_nosic";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "single_user") return Scenario::SingleUser;
  if (s == "two_user_toy") return Scenario::TwoUserToy;
  if (s == "frame_level") return Scenario::FrameLevel;
  throw ConfigError("unknown scenario '" + s + "'");
}

inline Modem parse_modem(const std::string& s) {
  if (s == "zak_sinc") return Modem::ZakSinc;
  if (s == "zak_gauss") return Modem::ZakGauss;
  if (s == "ofdm") return Modem::Ofdm;
  if (s == "ofdm_nosic") return Modem::OfdmNoSic;
  throw ConfigError("unknown modem '" + s + "'");
}

inline bool is_zak(Modem m) { return m == Modem::ZakSinc || m == Modem::ZakGauss; }

struct ScenarioConfig {
  Scenario scenario = Scenario::SingleUser;
  Modem modem = Modem::ZakGauss;
  int M_tile = 16;
  int N_tile = 16;
  double nu_p = 30e3;
  double nu_max = 815.0;
  std::vector<double> snr_db{25.0};
  std::vector<int> K_a{10};
  std::vector<int> delta{1};
  int r = 3;
  int p = 8;
  int q = 16;
  long long trials = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  double alpha = FilterSpec::kDefaultAlpha;
  bool genie = false;      // true effective channel instead of the pilot estimate (Zak only)
  bool noiseless = false;  // skip receiver noise

  int N_s() const { return p * q; }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (snr_db.empty()) throw ConfigError("snr grid is empty");
    if (M_tile < 2 || N_tile < 2 || M_tile % 2 || N_tile % 2) throw ConfigError("tile dimensions must be even and >= 2");
    if (!((M_tile == 4 && N_tile == 4) || (M_tile == 16 && N_tile == 16)))
      throw ConfigError("tile must be 4x4 (BCH(31,16)) or 16x16 (BCH(511,250))");
    if (p < 1 || q < 1) throw ConfigError("p and q must be positive");
    if (!(nu_p > 0.0)) throw ConfigError("nu_p must be positive");
    if (nu_max < 0.0) throw ConfigError("nu_max must be non-negative");
    if (2.0 * nu_max >= nu_p) throw ConfigError("Doppler spread 2*nu_max must stay below nu_p");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (scenario == Scenario::FrameLevel) {
      if (K_a.empty()) throw ConfigError("K_a grid is empty");
      for (int k : K_a)
        if (k < 1) throw ConfigError("K_a values must be >= 1");
      if (r < 1 || r > N_s()) throw ConfigError("need 1 <= r <= N_s");
    }
    if (scenario == Scenario::TwoUserToy) {
      if (delta.empty()) throw ConfigError("delta grid is empty");
      for (int d : delta)
        if (d < 1 || d >= q) throw ConfigError("delta must lie in [1, q)");
    }
  }

  SlotLayout layout() const { return SlotLayout::make(M_tile, N_tile); }
  FrameConfig frame() const { return FrameConfig::make(p, q, scenario == Scenario::FrameLevel ? r : 1, layout(), nu_p); }
  FilterSpec filter() const {
    return modem == Modem::ZakSinc ? FilterSpec::sinc() : FilterSpec::gaussian(alpha, alpha);
  }
  std::string filter_name() const { return is_zak(modem) ? filter().name() : "none"; }
};

struct Energies {
  double E_P = 0.0;  // per slot
  double E_D = 0.0;
  double E_p = 0.0;  // per pilot symbol
  double E_d = 0.0;  // per data symbol
  double N0 = 1.0;
};

/// N0 = 1, E_P = E_D = 10^{snr/10} B T over the whole frame.
inline Energies snr_to_energies(double snr_db, const FrameConfig& frame, int N_P, int N_D) {
  if (N_P < 1 || N_D < 1) throw std::invalid_argument("snr_to_energies: symbol counts must be positive");
  const DDGridParams g = frame.frame_grid();
  const double BT = g.bandwidth() * g.duration();
  Energies e;
  e.E_P = e.E_D = std::pow(10.0, snr_db / 10.0) * BT;
  e.E_p = e.E_P / N_P;
  e.E_d = e.E_D / N_D;
  return e;
}

inline Energies modem_energies(const ScenarioConfig& c, double snr_db) {
  const int N_P = is_zak(c.modem) ? 1 : c.M_tile * c.N_tile;
  return snr_to_energies(snr_db, c.frame(), N_P, c.M_tile * c.N_tile);
}

struct ResultRow {
  std::string scenario;
  std::string modem;
  std::string filter;
  int M_tile = 0;
  int N_tile = 0;
  double nu_p_hz = 0.0;
  double nu_max_hz = 0.0;
  int r = 0;
  int N_s = 0;
  std::string x_name;
  double x_value = 0.0;
  long long trials = 0;
  long long packets_sent = 0;
  long long packets_lost = 0;
  double plr = 0.0;
  double plr_ci_lo = 0.0;
  double plr_ci_hi = 0.0;
  std::uint64_t seed = 0;
  double wallclock_s = 0.0;  // not exported, varies run to run

  bool operator==(const ResultRow& o) const {
    return scenario == o.scenario && modem == o.modem && filter == o.filter && M_tile == o.M_tile &&
           N_tile == o.N_tile && nu_p_hz == o.nu_p_hz && nu_max_hz == o.nu_max_hz && r == o.r && N_s == o.N_s &&
           x_name == o.x_name && x_value == o.x_value && trials == o.trials && packets_sent == o.packets_sent &&
           packets_lost == o.packets_lost && seed == o.seed;
  }
};

/// Wilson score interval at 95 %.
inline std::pair<double, double> wilson_interval(long long lost, long long sent) {
  if (sent <= 0) return {0.0, 1.0};
  constexpr double z = 1.959964;
  const double n = static_cast<double>(sent);
  const double ph = static_cast<double>(lost) / n;
  const double den = 1.0 + z * z / n;
  const double c = (ph + z * z / (2.0 * n)) / den;
  const double h = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / den;
  // the bounds touch 0 and 1 exactly at the ends; avoid rounding residue there
  return {lost == 0 ? 0.0 : std::max(0.0, c - h), lost == sent ? 1.0 : std::min(1.0, c + h)};
}

inline void finalize(ResultRow& r) {
  r.plr = r.packets_sent ? static_cast<double>(r.packets_lost) / static_cast<double>(r.packets_sent) : 0.0;
  std::tie(r.plr_ci_lo, r.plr_ci_hi) = wilson_interval(r.packets_lost, r.packets_sent);
}

inline constexpr const char* kCsvHeader =
    "scenario,modem,filter,M_tile,N_tile,nu_p_hz,nu_max_hz,r,N_s,x_name,x_value,trials,packets_sent,packets_lost,"
    "plr,plr_ci_lo,plr_ci_hi,seed";

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string sci6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string csv_line(const ResultRow& r) {
  using detail::shortest;
  using detail::sci6;
  std::ostringstream o;
  o << r.scenario << ',' << r.modem << ',' << r.filter << ',' << r.M_tile << ',' << r.N_tile << ','
    << shortest(r.nu_p_hz) << ',' << shortest(r.nu_max_hz) << ',' << r.r << ',' << r.N_s << ',' << r.x_name << ','
    << shortest(r.x_value) << ',' << r.trials << ',' << r.packets_sent << ',' << r.packets_lost << ',' << sci6(r.plr)
    << ',' << sci6(r.plr_ci_lo) << ',' << sci6(r.plr_ci_hi) << ',' << r.seed;
  return o.str();
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) s += csv_line(r) + "\n";
  return s;
}

inline void export_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("export_csv: no rows to write");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("export_csv: cannot open '" + path + "' for writing");
  f << to_csv(rows);
  if (!f) throw std::runtime_error("export_csv: write failed for '" + path + "'");
}

inline std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("parse_csv: header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 18) throw std::runtime_error("parse_csv: expected 18 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.scenario = f[0];
    r.modem = f[1];
    r.filter = f[2];
    r.M_tile = std::stoi(f[3]);
    r.N_tile = std::stoi(f[4]);
    r.nu_p_hz = std::stod(f[5]);
    r.nu_max_hz = std::stod(f[6]);
    r.r = std::stoi(f[7]);
    r.N_s = std::stoi(f[8]);
    r.x_name = f[9];
    r.x_value = std::stod(f[10]);
    r.trials = std::stoll(f[11]);
    r.packets_sent = std::stoll(f[12]);
    r.packets_lost = std::stoll(f[13]);
    r.plr = std::stod(f[14]);
    r.plr_ci_lo = std::stod(f[15]);
    r.plr_ci_hi = std::stod(f[16]);
    r.seed = std::stoull(f[17]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> parse_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("parse_csv: cannot open '" + path + "'");
  return parse_csv(f);
}

// "a:b:step" inclusive, or a single value, or a comma list
template <class T>
std::vector<T> parse_grid(const std::string& s) {
  std::vector<T> out;
  auto num = [&](const std::string& t) -> T {
    try {
      std::size_t pos = 0;
      double v = std::stod(t, &pos);
      if (pos != t.size()) throw ConfigError("bad number '" + t + "'");
      if constexpr (std::is_integral_v<T>) {
        if (v != std::floor(v)) throw ConfigError("expected an integer, got '" + t + "'");
      }
      return static_cast<T>(v);
    } catch (const std::logic_error&) {
      throw ConfigError("bad number '" + t + "'");
    }
  };
  if (s.find(':') != std::string::npos) {
    auto f = detail::split(s, ':');
    if (f.size() != 3) throw ConfigError("range must be start:stop:step, got '" + s + "'");
    const double a = static_cast<double>(num(f[0])), b = static_cast<double>(num(f[1])), st = static_cast<double>(num(f[2]));
    if (!(st > 0.0) || b < a) throw ConfigError("bad range '" + s + "'");
    for (long long i = 0;; ++i) {
      const double v = a + static_cast<double>(i) * st;
      if (v > b + 1e-9 * std::max(1.0, std::abs(b))) break;
      out.push_back(static_cast<T>(v));
    }
    return out;
  }
  for (const auto& t : detail::split(s, ','))
    if (!t.empty()) out.push_back(num(t));
  if (out.empty()) throw ConfigError("empty grid '" + s + "'");
  return out;
}

namespace detail {

template <class T>
std::vector<T> json_grid(const nlohmann::json& j, const char* key) {
  if (j.is_string()) return parse_grid<T>(j.get<std::string>());
  if (j.is_number()) return {j.get<T>()};
  if (j.is_array()) {
    std::vector<T> v;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError(std::string(key) + ": list entries must be numbers");
      v.push_back(e.get<T>());
    }
    return v;
  }
  throw ConfigError(std::string(key) + ": expected a number, list or \"a:b:step\"");
}

}  // namespace detail

/// JSON keys mirror ScenarioConfig; unknown keys are rejected.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ScenarioConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "scenario") c.scenario = parse_scenario(v.get<std::string>());
      else if (k == "modem") c.modem = parse_modem(v.get<std::string>());
      else if (k == "M_tile") c.M_tile = v.get<int>();
      else if (k == "N_tile") c.N_tile = v.get<int>();
      else if (k == "nu_p_hz") c.nu_p = v.get<double>();
      else if (k == "nu_max_hz") c.nu_max = v.get<double>();
      else if (k == "snr_db") c.snr_db = detail::json_grid<double>(v, "snr_db");
      else if (k == "K_a") c.K_a = detail::json_grid<int>(v, "K_a");
      else if (k == "delta") c.delta = detail::json_grid<int>(v, "delta");
      else if (k == "r") c.r = v.get<int>();
      else if (k == "p") c.p = v.get<int>();
      else if (k == "q") c.q = v.get<int>();
      else if (k == "trials") c.trials = v.get<long long>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "threads") c.threads = v.get<int>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "genie") c.genie = v.get<bool>();
      else if (k == "noiseless") c.noiseless = v.get<bool>();
      else if (k == "out") continue;
      else throw ConfigError("unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace zakcra
