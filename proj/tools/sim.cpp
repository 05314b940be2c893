// sim: run Zak-OTFS / OFDM coded random access scenarios and write PLR CSV.
//
//   sim run --config cfg.json [overrides...]
//   sim run --scenario frame_level --modem zak_gauss --snr-db 25 --ka 10:100:10 --trials 2000 --seed 42 --out r.csv
//   sim sweep --scenario single_user --modem zak_gauss,zak_sinc,ofdm --snr-db 0:30:2.5 --out r.csv

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "zakcra/harness.hpp"

using namespace zakcra;

namespace {

struct Options {
  std::string config, scenario, modem, snr, ka, delta, out;
  int tile = 0, r = 0, threads = 0;
  double nu_p = 0, nu_max = 0, alpha = 0;
  long long trials = 0;
  std::uint64_t seed = 0;
  bool genie = false, noiseless = false, quiet = false;
};

void add_options(CLI::App& app, Options& o, bool sweep) {
  app.add_option("--config", o.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--scenario", o.scenario, "single_user | two_user_toy | frame_level");
  app.add_option("--modem", o.modem, sweep ? "comma-separated modems" : "zak_gauss | zak_sinc | ofdm | ofdm_nosic");
  app.add_option("--snr-db", o.snr, "SNR grid: value, list a,b,c or range lo:hi:step");
  app.add_option("--ka", o.ka, "active users grid (frame_level)");
  app.add_option("--delta", o.delta, "replica distance grid (two_user_toy)");
  app.add_option("--tile", o.tile, "square tile size, 4 or 16");
  app.add_option("--nu-p", o.nu_p, "Doppler period in Hz");
  app.add_option("--nu-max", o.nu_max, "maximum Doppler in Hz");
  app.add_option("--r", o.r, "replicas per user (frame_level)");
  app.add_option("--trials", o.trials, "frames per grid point");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--threads", o.threads, "worker threads");
  app.add_option("--alpha", o.alpha, "Gaussian pulse parameter");
  app.add_flag("--genie", o.genie, "use the true effective channel (Zak modems)");
  app.add_flag("--noiseless", o.noiseless, "skip receiver noise");
  app.add_option("--out", o.out, "CSV output path (default stdout)");
  app.add_flag("--quiet", o.quiet, "no progress on stderr");
}

ScenarioConfig build_config(const CLI::App& app, const Options& o, std::string& out, bool modem_list = false) {
  ScenarioConfig c;
  if (!o.config.empty()) {
    std::ifstream f(o.config);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + o.config + "': " + e.what());
    }
    if (j.is_object() && j.contains("out") && j["out"].is_string()) out = j["out"].get<std::string>();
    c = config_from_json(j);
  }
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--scenario")) c.scenario = parse_scenario(o.scenario);
  if (given("--modem") && !modem_list) c.modem = parse_modem(o.modem);
  if (given("--snr-db")) c.snr_db = parse_grid<double>(o.snr);
  if (given("--ka")) c.K_a = parse_grid<int>(o.ka);
  if (given("--delta")) c.delta = parse_grid<int>(o.delta);
  if (given("--tile")) c.M_tile = c.N_tile = o.tile;
  if (given("--nu-p")) c.nu_p = o.nu_p;
  if (given("--nu-max")) c.nu_max = o.nu_max;
  if (given("--r")) c.r = o.r;
  if (given("--trials")) c.trials = o.trials;
  if (given("--seed")) c.seed = o.seed;
  if (given("--threads")) c.threads = o.threads;
  if (given("--alpha")) c.alpha = o.alpha;
  if (o.genie) c.genie = true;
  if (o.noiseless) c.noiseless = true;
  if (given("--out")) out = o.out;
  return c;
}

void write(const std::vector<ResultRow>& rows, const std::string& out) {
  if (out.empty()) {
    std::cout << to_csv(rows);
  } else {
    export_csv(rows, out);
  }
}

ProgressFn progress(bool quiet) {
  if (quiet) return {};
  return [](const ResultRow& r) {
    std::cerr << r.scenario << " " << r.modem << " " << r.x_name << "=" << detail::shortest(r.x_value) << ": "
              << r.packets_lost << "/" << r.packets_sent << " lost, plr " << detail::sci6(r.plr) << " ("
              << detail::shortest(r.wallclock_s) << " s)\n";
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zak-OTFS coded random access simulator"};
  app.require_subcommand(1);
  Options run_o, sweep_o;
  CLI::App* run = app.add_subcommand("run", "one modem over the scenario grid");
  add_options(*run, run_o, false);
  CLI::App* sweep = app.add_subcommand("sweep", "several modems over an SNR grid, one CSV");
  add_options(*sweep, sweep_o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      std::string out;
      ScenarioConfig c = build_config(*run, run_o, out);
      c.validate();
      write(run_scenario(c, progress(run_o.quiet)), out);
    } else {
      std::string out;
      ScenarioConfig base = build_config(*sweep, sweep_o, out, true);
      std::vector<Modem> list;
      if (sweep->count("--modem") == 0) {
        list.push_back(base.modem);
      } else {
        for (const auto& m : detail::split(sweep_o.modem, ',')) list.push_back(parse_modem(m));
      }
      std::vector<ResultRow> rows;
      for (Modem m : list) {
        ScenarioConfig c = base;
        c.modem = m;
        c.validate();
        auto part = run_scenario(c, progress(sweep_o.quiet));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      write(rows, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
