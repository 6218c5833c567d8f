#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "run_support.hpp"

using cli::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Commands ------------------------------------------------------------------------

struct Command {
  std::function<json()> defaults;
  std::function<void(const json&, cli::RunContext&)> run;
};

void write_wigner(cli::RunContext& run, const gkpsim_state* s, const json& w, const std::string& stem) {
  const double r = w.at("range").get<double>();
  const int n = w.at("points").get<int>();
  if (n < 2 || !(r > 0)) cli::config_error("wigner.points must be >= 2 and wigner.range > 0");
  char* text = nullptr;
  cli::check(gkpsim_wigner_export(s, -r, r, n, -r, r, n, GKPSIM_WIGNER_CSV, &text));
  run.write_text(stem + ".csv", cli::take_string(text));
  cli::check(gkpsim_wigner_export(s, -r, r, n, -r, r, n, GKPSIM_WIGNER_SIDECAR_JSON, &text));
  run.write_text(stem + ".json", cli::take_string(text));
  if (w.at("svg").get<bool>()) {
    cli::check(gkpsim_wigner_export(s, -r, r, n, -r, r, n, GKPSIM_WIGNER_SVG, &text));
    run.write_text(stem + ".svg", cli::take_string(text));
  }
}

void save_state(cli::RunContext& run, const gkpsim_state* s, const std::string& name, const json& meta) {
  cli::check(gkpsim_state_save(s, run.path(name).c_str(), meta.dump().c_str()));
  run.register_file(name);
}

std::string export_text(const gkpsim_result* r, gkpsim_export kind) {
  char* text = nullptr;
  cli::check(gkpsim_result_export(r, kind, &text));
  return cli::take_string(text);
}

json wigner_defaults() { return {{"range", 7.0}, {"points", 141}, {"svg", true}}; }

// params
json params_defaults() {
  return {{"trap", "lattice"},      {"depth_mK", 1.5},   {"waist_um", nullptr},    {"waist_nm", nullptr},
          {"wavelength_nm", 1040.0}, {"mass_u", 87.906}, {"theta_deg", 45.0}, {"output_dir", ""}};
}

void run_params(const json& c, cli::RunContext& run) {
  const std::string trap = c.at("trap");
  gkpsim_trap_spec spec{};
  if (trap == "lattice") spec.kind = GKPSIM_TRAP_LATTICE;
  else if (trap == "tweezer") spec.kind = GKPSIM_TRAP_TWEEZER;
  else cli::config_error("trap must be 'lattice' or 'tweezer', got '" + trap + "'");
  if (!c.at("waist_um").is_null() && !c.at("waist_nm").is_null()) cli::config_error("give only one of waist_um and waist_nm");
  double waist = trap == "lattice" ? 20e-6 : 500e-9;
  if (!c.at("waist_um").is_null()) waist = c.at("waist_um").get<double>() * 1e-6;
  if (!c.at("waist_nm").is_null()) waist = c.at("waist_nm").get<double>() * 1e-9;
  cli::check(gkpsim_kelvin_to_joule(c.at("depth_mK").get<double>() * 1e-3, &spec.depth_J));
  cli::check(gkpsim_amu_to_kg(c.at("mass_u").get<double>(), &spec.mass_kg));
  spec.waist_m = waist;
  spec.wavelength_m = c.at("wavelength_nm").get<double>() * 1e-9;
  spec.theta_rad = c.at("theta_deg").get<double>() * kPi / 180.0;
  gkpsim_osc_params p{};
  cli::check(gkpsim_trap_params(&spec, &p));
  if (spec.kind == GKPSIM_TRAP_TWEEZER) {
    int flag = 0;
    cli::check(gkpsim_tweezer_paraxial_flag(&spec, &flag));
    if (flag) run.add_warning("Rayleigh length below twice the waist: paraxial model is questionable");
  }
  const double k = 2e3 * kPi;
  json j = {{"trap", trap},
            {"omega_x_rad_s", p.omega_x},
            {"omega_y_rad_s", p.omega_y},
            {"omega_z_rad_s", p.omega_z},
            {"f_x_khz", p.omega_x / k},
            {"f_y_khz", p.omega_y / k},
            {"f_z_khz", p.omega_z / k},
            {"eta_z", p.eta_z},
            {"eta_x", p.eta_x},
            {"eta_y", p.eta_y},
            {"eps_zx", p.eps_zx},
            {"eps_zy", p.eps_zy},
            {"eps_xy", p.eps_xy},
            {"depth_J", p.depth_J},
            {"mass_kg", p.mass_kg}};
  char table[640];
  std::snprintf(table, sizeof(table),
                "%-18s %s\n%-18s %12.3f kHz\n%-18s %12.3f kHz\n%-18s %12.3e\n%-18s %12.3e\n%-18s %12.3e\n%-18s %12.3e\n",
                "parameter", trap.c_str(), "omega_z / 2pi", p.omega_z / k, "omega_x,y / 2pi", p.omega_x / k, "eta_z",
                p.eta_z, "eta_x", p.eta_x, "eps_zx", p.eps_zx, "eps_xy", p.eps_xy);
  std::cout << table;
  run.write_text("params.json", j.dump(2) + "\n");
  run.write_text("params.txt", table);
  run.set_summary(j);
}

// prepare-ideal
json ideal_defaults() {
  return {{"scheme", "corrective"},
          {"delta_init", 0.3},
          {"rounds", 3},
          {"deltas", {1.0, 0.5, 0.31}},
          {"epsilons", json::array()},
          {"schedule_file", ""},
          {"dim", 150},
          {"wigner", wigner_defaults()},
          {"output_dir", ""}};
}

void run_prepare_ideal(const json& c, cli::RunContext& run) {
  const std::string scheme = c.at("scheme");
  const int rounds = c.at("rounds");
  const int dim = c.at("dim");
  const double d0 = c.at("delta_init");
  if (rounds < 0) cli::config_error("rounds must be >= 0");
  cli::ResultHandle r;
  if (scheme == "postselect") {
    cli::check(gkpsim_postselect_prepare(d0, rounds, dim, &r.p));
  } else if (scheme == "corrective") {
    std::vector<double> deltas = c.at("deltas");
    std::vector<double> eps = c.at("epsilons");
    const std::string file = c.at("schedule_file");
    if (!file.empty()) {
      const json s = cli::load_config_file(file);
      if (!s.contains("deltas")) cli::config_error("schedule file " + file + " has no 'deltas'");
      deltas = s.at("deltas").get<std::vector<double>>();
      eps = s.value("epsilons", std::vector<double>{});
    }
    if (static_cast<int>(deltas.size()) < rounds)
      cli::config_error("deltas has " + std::to_string(deltas.size()) + " entries but rounds = " + std::to_string(rounds));
    if (!eps.empty() && static_cast<int>(eps.size()) < rounds)
      cli::config_error("epsilons has fewer entries than rounds");
    cli::check(gkpsim_corrective_prepare(d0, deltas.data(), eps.empty() ? nullptr : eps.data(), rounds, dim, &r.p));
  } else {
    cli::config_error("scheme must be 'corrective' or 'postselect', got '" + scheme + "'");
  }
  run.add_result_warnings(r.p);
  run.write_text("rounds.json", export_text(r.p, GKPSIM_EXPORT_ROUNDS_JSON));
  const std::string summary = export_text(r.p, GKPSIM_EXPORT_SUMMARY_JSON);
  run.write_text("summary.json", summary);
  cli::StateHandle s;
  cli::check(gkpsim_result_state(r.p, &s.p));
  save_state(run, s.p, "final_state.gkps", {{"command", "prepare-ideal"}, {"scheme", scheme}});
  write_wigner(run, s.p, c.at("wigner"), "wigner_final");
  const json sj = json::parse(summary);
  for (const auto& rec : sj.at("rounds"))
    std::printf("round %d  delta_x %.4f  delta_z %.4f\n", rec.at("round").get<int>(), rec.at("delta_x").get<double>(),
                rec.at("delta_z").get<double>());
  run.set_summary(sj);
}

// optimize-deltas
json optimize_defaults() {
  return {{"delta_init", 0.3}, {"rounds", 5}, {"dim", 150}, {"tol", 1e-3}, {"output_dir", ""}};
}

void run_optimize(const json& c, cli::RunContext& run) {
  const int rounds = c.at("rounds");
  if (rounds < 1 || rounds > 12) cli::config_error("rounds must lie in [1, 12]");
  std::vector<double> deltas(rounds), dx(rounds);
  cli::ResultHandle r;
  cli::check(gkpsim_optimize_deltas(c.at("delta_init"), rounds, c.at("dim"), c.at("tol"), deltas.data(), dx.data(), &r.p));
  run.add_result_warnings(r.p);
  run.write_text("schedule.json", export_text(r.p, GKPSIM_EXPORT_SCHEDULE_JSON));
  run.write_text("rounds.json", export_text(r.p, GKPSIM_EXPORT_ROUNDS_JSON));
  for (int k = 0; k < rounds; ++k) std::printf("delta_%d = %.4f  (delta_x %.4f)\n", k + 1, deltas[k], dx[k]);
  run.set_summary({{"deltas", deltas}, {"delta_x", dx}});
}

// prepare-physical
json physical_defaults() {
  char* text = nullptr;
  cli::check(gkpsim_physical_default_config(&text));
  json d = json::parse(cli::take_string(text));
  d["preset"] = "paper-lattice";
  d["wigner"] = {{"range", 7.0}, {"points", 121}, {"svg", true}};
  d["output_dir"] = "";
  return d;
}

void run_physical(const json& c, cli::RunContext& run) {
  if (c.at("preset") != "paper-lattice") cli::config_error("preset must be 'paper-lattice'");
  json phys = c;
  phys.erase("preset");
  phys.erase("wigner");
  phys.erase("output_dir");
  cli::ResultHandle r;
  cli::check(gkpsim_prepare_physical(phys.dump().c_str(), &r.p));
  run.add_result_warnings(r.p);
  run.write_text("trajectory.csv", export_text(r.p, GKPSIM_EXPORT_TRAJECTORY_CSV));
  run.write_text("rounds.json", export_text(r.p, GKPSIM_EXPORT_ROUNDS_JSON));
  run.write_text("schedule.json", export_text(r.p, GKPSIM_EXPORT_SCHEDULE_JSON));
  run.write_text("resolved_config.json", export_text(r.p, GKPSIM_EXPORT_CONFIG_JSON));
  const std::string summary = export_text(r.p, GKPSIM_EXPORT_SUMMARY_JSON);
  run.write_text("summary.json", summary);
  cli::StateHandle s;
  cli::check(gkpsim_result_state(r.p, &s.p));
  save_state(run, s.p, "final_state.gkps", {{"command", "prepare-physical"}, {"frame", "code"}});
  int n = 0;
  cli::check(gkpsim_result_snapshot_count(r.p, &n));
  for (int i = 0; i < n; ++i) {
    cli::StateHandle snap;
    cli::check(gkpsim_result_snapshot(r.p, i, &snap.p));
    write_wigner(run, snap.p, c.at("wigner"), "wigner_round" + std::to_string(i + 1));
  }
  const json sj = json::parse(summary);
  std::printf("squeeze: delta_x %.4f  delta_z %.4f  min ground pop %.4f\n", sj.at("squeeze").at("delta_x").get<double>(),
              sj.at("squeeze").at("delta_z").get<double>(), sj.at("min_ground_pop").get<double>());
  for (const auto& rec : sj.at("rounds"))
    std::printf("round %d  delta_x %.4f  delta_z %.4f\n", rec.at("round").get<int>(), rec.at("delta_x").get<double>(),
                rec.at("delta_z").get<double>());
  run.set_summary(sj);
}

// qec-round
json qec_defaults() {
  return {{"state", ""},        {"code_delta", 0.3},  {"logical", "zero"}, {"dim", 150},
          {"displace_q", 0.0},  {"displace_p", 0.0},  {"envelope", nullptr}, {"quadrature", "both"},
          {"rounds", 1},        {"wigner", wigner_defaults()}, {"output_dir", ""}};
}

gkpsim_logical parse_logical(const std::string& s) {
  if (s == "zero" || s == "0") return GKPSIM_LOGICAL_ZERO;
  if (s == "one" || s == "1") return GKPSIM_LOGICAL_ONE;
  if (s == "plus" || s == "+") return GKPSIM_LOGICAL_PLUS;
  if (s == "minus" || s == "-") return GKPSIM_LOGICAL_MINUS;
  cli::config_error("logical must be zero, one, plus or minus, got '" + s + "'");
}

void run_qec(const json& c, cli::RunContext& run) {
  cli::StateHandle s;
  const std::string path = c.at("state");
  if (!path.empty()) cli::check(gkpsim_state_load(path.c_str(), &s.p));
  else cli::check(gkpsim_state_finite_gkp(parse_logical(c.at("logical")), c.at("code_delta"), -1, c.at("dim"), &s.p));
  const double dq = c.at("displace_q"), dp = c.at("displace_p");
  if (dq != 0.0 || dp != 0.0) cli::check(gkpsim_state_displace(s.p, dq, dp));
  const double env = c.at("envelope").is_null() ? c.at("code_delta").get<double>() : c.at("envelope").get<double>();
  const std::string qs = c.at("quadrature");
  gkpsim_quadrature quad;
  if (qs == "q") quad = GKPSIM_QUAD_Q;
  else if (qs == "p") quad = GKPSIM_QUAD_P;
  else if (qs == "both") quad = GKPSIM_QUAD_BOTH;
  else cli::config_error("quadrature must be q, p or both");
  const int rounds = c.at("rounds");
  if (rounds < 1) cli::config_error("rounds must be >= 1");

  json trace = json::array();
  auto record = [&](int k, const gkpsim_state* st) {
    double dx, dz, mq, mp;
    cli::check(gkpsim_state_effective_squeezing(st, &dx, &dz));
    cli::check(gkpsim_state_mean_quadratures(st, &mq, &mp));
    trace.push_back({{"round", k}, {"delta_x", dx}, {"delta_z", dz}, {"mean_q", mq}, {"mean_p", mp}});
    std::printf("round %d  delta_x %.5f  delta_z %.5f  <q> %.4f  <p> %.4f\n", k, dx, dz, mq, mp);
  };
  record(0, s.p);
  for (int k = 1; k <= rounds; ++k) {
    cli::ResultHandle r;
    cli::check(gkpsim_qec_round(s.p, env, quad, &r.p));
    run.add_result_warnings(r.p);
    cli::StateHandle next;
    cli::check(gkpsim_result_state(r.p, &next.p));
    std::swap(s.p, next.p);
    record(k, s.p);
  }
  run.write_text("rounds.json", trace.dump(2) + "\n");
  save_state(run, s.p, "final_state.gkps", {{"command", "qec-round"}, {"envelope", env}});
  write_wigner(run, s.p, c.at("wigner"), "wigner_final");
  run.set_summary({{"rounds", trace}, {"envelope", env}});
}

// wigner
json wigner_cmd_defaults() {
  return {{"state", ""}, {"q_min", -7.0}, {"q_max", 7.0}, {"p_min", -7.0}, {"p_max", 7.0},
          {"points", 141}, {"svg", true}, {"output_dir", ""}};
}

void run_wigner(const json& c, cli::RunContext& run) {
  const std::string path = c.at("state");
  if (path.empty()) cli::config_error("wigner needs a state file (--state)");
  cli::StateHandle s;
  cli::check(gkpsim_state_load(path.c_str(), &s.p));
  const int n = c.at("points");
  if (n < 2) cli::config_error("points must be >= 2");
  const double q0 = c.at("q_min"), q1 = c.at("q_max"), p0 = c.at("p_min"), p1 = c.at("p_max");
  char* text = nullptr;
  cli::check(gkpsim_wigner_export(s.p, q0, q1, n, p0, p1, n, GKPSIM_WIGNER_CSV, &text));
  run.write_text("wigner.csv", cli::take_string(text));
  cli::check(gkpsim_wigner_export(s.p, q0, q1, n, p0, p1, n, GKPSIM_WIGNER_SIDECAR_JSON, &text));
  const std::string side = cli::take_string(text);
  run.write_text("wigner.json", side);
  if (c.at("svg").get<bool>()) {
    cli::check(gkpsim_wigner_export(s.p, q0, q1, n, p0, p1, n, GKPSIM_WIGNER_SVG, &text));
    run.write_text("wigner.svg", cli::take_string(text));
  }
  run.set_summary(json::parse(side));
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m = {
      {"params", {params_defaults, run_params}},
      {"prepare-ideal", {ideal_defaults, run_prepare_ideal}},
      {"optimize-deltas", {optimize_defaults, run_optimize}},
      {"prepare-physical", {physical_defaults, run_physical}},
      {"qec-round", {qec_defaults, run_qec}},
      {"wigner", {wigner_cmd_defaults, run_wigner}},
  };
  return m;
}

// Resolves, runs and records one command into `dir`. Returns the exit code.
int execute(const std::string& name, const json& file_cfg, const json& flags, const std::string& dir_flag,
            bool quiet_errors = false, json* resolved_out = nullptr) {
  std::optional<cli::RunContext> run;
  try {
    const Command& cmd = commands().at(name);
    json cfg;
    try {
      cfg = cli::resolve_config(cmd.defaults(), file_cfg, flags);
    } catch (const json::exception& e) {
      cli::config_error(e.what());
    }
    if (resolved_out) *resolved_out = cfg;
    std::string dir = dir_flag.empty() ? cfg.value("output_dir", std::string()) : dir_flag;
    dir = cli::output_dir_for(dir, name);
    run.emplace(name, dir, cfg);
    try {
      cmd.run(cfg, *run);
    } catch (const json::exception& e) {
      cli::config_error(std::string("config value has the wrong type: ") + e.what());
    }
    run->finish();
    return cli::kExitOk;
  } catch (const cli::CliError& e) {
    if (run) run->fail(e);
    if (!quiet_errors) std::cerr << cli::error_json(e) << std::endl;
    return e.exit_code;
  }
}

// sweep: {"command": name, "base": {...}, "grid": {key: [values...]}, "workers": n}
int run_sweep(const json& file_cfg, const std::string& dir_flag, int workers_flag) {
  try {
    const json allowed = {{"command", ""}, {"base", json::object()}, {"grid", json::object()}, {"workers", 1}, {"output_dir", ""}};
    for (const auto& [k, v] : file_cfg.items())
      if (!allowed.contains(k)) cli::config_error("unknown sweep key '" + k + "'");
    const std::string name = file_cfg.value("command", std::string());
    if (!commands().count(name)) cli::config_error("sweep command must be one of the run commands, got '" + name + "'");
    const json base = file_cfg.value("base", json::object());
    const json grid = file_cfg.value("grid", json::object());
    int workers = workers_flag > 0 ? workers_flag : file_cfg.value("workers", 1);
    workers = std::max(1, workers);
    std::string root = dir_flag.empty() ? file_cfg.value("output_dir", std::string()) : dir_flag;
    root = cli::output_dir_for(root, "sweep");

    std::vector<json> points{base};
    for (const auto& [key, values] : grid.items()) {
      if (!values.is_array() || values.empty()) cli::config_error("sweep grid entry '" + key + "' must be a non-empty array");
      std::vector<json> next;
      for (const auto& p : points)
        for (const auto& v : values) {
          json q = p;
          q[key] = v;
          next.push_back(std::move(q));
        }
      points = std::move(next);
    }
    // Validate every point up front so a typo fails before any work starts.
    for (const auto& p : points) (void)cli::resolve_config(commands().at(name).defaults(), p, json());

    std::vector<int> codes(points.size(), 0);
    std::vector<std::string> dirs(points.size());
    std::mutex mu;
    size_t next = 0;
    auto worker = [&] {
      for (;;) {
        size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= points.size()) return;
          i = next++;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "run_%04zu", i);
        dirs[i] = (std::filesystem::path(root) / buf).string();
        json p = points[i];
        p["output_dir"] = dirs[i];
        codes[i] = execute(name, p, json(), "", true);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json runs = json::array();
    int worst = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      runs.push_back({{"dir", std::filesystem::path(dirs[i]).filename().string()}, {"config", points[i]}, {"exit_code", codes[i]}});
      worst = std::max(worst, codes[i]);
    }
    cli::RunContext run("sweep", root, file_cfg);
    run.set_summary({{"runs", runs}});
    if (worst != 0) run.add_warning("one or more sweep runs failed; see their manifests");
    run.finish();
    std::printf("sweep: %zu runs, worst exit code %d\n", points.size(), worst);
    return worst;
  } catch (const cli::CliError& e) {
    std::cerr << cli::error_json(e) << std::endl;
    return e.exit_code;
  }
}

// Flag helpers: only options that were given on the command line override.
using FlagSink = std::map<std::string, std::function<void(json&)>>;

template <class T>
CLI::Option* bind_option(CLI::App* app, const std::string& flag, const std::string& key, FlagSink& sink,
                         const std::string& help) {
  auto value = std::make_shared<T>();
  auto* opt = app->add_option(flag, *value, help);
  sink[key] = [value, opt, key](json& j) {
    if (opt->count()) j[key] = *value;
  };
  return opt;
}

// Boolean switch; `--name` sets true, `--name=false` sets false.
CLI::Option* bind_switch(CLI::App* app, const std::string& flag, const std::string& key, FlagSink& sink,
                         const std::string& help) {
  auto value = std::make_shared<bool>(false);
  auto* opt = app->add_flag(flag, *value, help);
  sink[key] = [value, opt, key](json& j) {
    if (opt->count()) j[key] = *value;
  };
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gkpsim: GKP code states in trapped-atom motional modes"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_version_flag("--version", std::string(gkpsim_version()));
  std::string config_path, out_dir;
  app.add_option("--config", config_path, "JSON config file (see docs/config.md)");
  app.add_option("--out", out_dir, "Output directory (default $GKPSIM_OUTPUT_ROOT/<command>)");

  std::map<std::string, FlagSink> flags;
  std::map<std::string, CLI::App*> subs;

  {
    auto* s = app.add_subcommand("params", "Oscillator parameters of a trap");
    auto& f = flags["params"];
    bind_option<std::string>(s, "--trap", "trap", f, "lattice or tweezer");
    bind_option<double>(s, "--depth-mK", "depth_mK", f, "trap depth in mK");
    bind_option<double>(s, "--waist-um", "waist_um", f, "beam waist in micrometres");
    bind_option<double>(s, "--waist-nm", "waist_nm", f, "beam waist in nanometres");
    bind_option<double>(s, "--wavelength-nm", "wavelength_nm", f, "trap wavelength in nm");
    bind_option<double>(s, "--mass-u", "mass_u", f, "atom mass in u (default 87.906)");
    bind_option<double>(s, "--theta-deg", "theta_deg", f, "lattice angle in degrees");
    subs["params"] = s;
  }
  {
    auto* s = app.add_subcommand("prepare-ideal", "Gate-level GKP preparation");
    auto& f = flags["prepare-ideal"];
    bind_option<std::string>(s, "--scheme", "scheme", f, "corrective or postselect");
    bind_option<double>(s, "--delta-init", "delta_init", f, "initial squeezing");
    bind_option<int>(s, "--rounds", "rounds", f, "number of rounds");
    bind_option<std::vector<double>>(s, "--deltas", "deltas", f, "correction strengths")->delimiter(',');
    bind_option<std::vector<double>>(s, "--epsilons", "epsilons", f, "pre-rotation strengths")->delimiter(',');
    bind_option<std::string>(s, "--schedule-file", "schedule_file", f, "schedule.json from optimize-deltas");
    bind_option<int>(s, "--dim", "dim", f, "Fock cutoff");
    subs["prepare-ideal"] = s;
  }
  {
    auto* s = app.add_subcommand("optimize-deltas", "Greedy optimisation of the correction strengths");
    auto& f = flags["optimize-deltas"];
    bind_option<double>(s, "--delta-init", "delta_init", f, "initial squeezing");
    bind_option<int>(s, "--rounds", "rounds", f, "number of rounds");
    bind_option<int>(s, "--dim", "dim", f, "Fock cutoff");
    bind_option<double>(s, "--tol", "tol", f, "golden-section tolerance");
    subs["optimize-deltas"] = s;
  }
  {
    auto* s = app.add_subcommand("prepare-physical", "Pulse-level lattice preparation");
    auto& f = flags["prepare-physical"];
    bind_option<std::string>(s, "--preset", "preset", f, "paper-lattice");
    bind_option<std::vector<int>>(s, "--dims", "squeeze_dims", f, "squeeze-stage cutoffs, e.g. 8,8,36")->delimiter(',');
    bind_option<std::vector<int>>(s, "--mixed-dims", "mixed_dims", f, "mixed-stage cutoffs, e.g. 3,3,36")->delimiter(',');
    bind_option<std::string>(s, "--potential", "potential", f, "exact or expansion");
    bind_option<std::string>(s, "--displacement", "displacement", f, "exact-beam or closed-form");
    bind_switch(s, "--harmonic", "harmonic", f, "drop anharmonic and coupling terms (expansion only)");
    bind_option<double>(s, "--hold-us", "hold_us", f, "hold time at reduced depth (default: optimised)");
    bind_option<std::vector<double>>(s, "--deltas", "deltas", f, "correction strengths")->delimiter(',');
    subs["prepare-physical"] = s;
  }
  {
    auto* s = app.add_subcommand("qec-round", "Ideal error-correction rounds on a code state");
    auto& f = flags["qec-round"];
    bind_option<std::string>(s, "--state", "state", f, "input state file (default: finite code state)");
    bind_option<double>(s, "--code-delta", "code_delta", f, "envelope of the generated code state");
    bind_option<std::string>(s, "--logical", "logical", f, "zero, one, plus or minus");
    bind_option<int>(s, "--dim", "dim", f, "Fock cutoff");
    bind_option<double>(s, "--displace-q", "displace_q", f, "error displacement along q");
    bind_option<double>(s, "--displace-p", "displace_p", f, "error displacement along p");
    bind_option<double>(s, "--envelope", "envelope", f, "envelope used for the round distances");
    bind_option<std::string>(s, "--quadrature", "quadrature", f, "q, p or both");
    bind_option<int>(s, "--rounds", "rounds", f, "number of rounds");
    subs["qec-round"] = s;
  }
  {
    auto* s = app.add_subcommand("wigner", "Wigner function of a saved state");
    auto& f = flags["wigner"];
    bind_option<std::string>(s, "--state", "state", f, "state file");
    bind_option<double>(s, "--q-min", "q_min", f, "lower q bound");
    bind_option<double>(s, "--q-max", "q_max", f, "upper q bound");
    bind_option<double>(s, "--p-min", "p_min", f, "lower p bound");
    bind_option<double>(s, "--p-max", "p_max", f, "upper p bound");
    bind_option<int>(s, "--points", "points", f, "grid points per axis");
    bind_switch(s, "--svg", "svg", f, "also write an SVG heatmap");
    subs["wigner"] = s;
  }
  int sweep_workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations in parallel (needs --config)");
  sweep->add_option("--workers", sweep_workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << cli::error_json(cli::CliError{cli::kExitConfig, "usage-error", e.what()}) << std::endl;
    return cli::kExitConfig;
  }

  json file_cfg;
  try {
    if (!config_path.empty()) file_cfg = cli::load_config_file(config_path);
  } catch (const cli::CliError& e) {
    std::cerr << cli::error_json(e) << std::endl;
    return e.exit_code;
  }

  if (sweep->parsed()) {
    if (config_path.empty()) {
      std::cerr << cli::error_json(cli::CliError{cli::kExitConfig, "config-error", "sweep needs --config"}) << std::endl;
      return cli::kExitConfig;
    }
    return run_sweep(file_cfg, out_dir, sweep_workers);
  }
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    json flag_cfg = json::object();
    for (const auto& [key, fn] : flags[name]) fn(flag_cfg);
    return execute(name, file_cfg, flag_cfg, out_dir);
  }
  return cli::kExitConfig;
}
