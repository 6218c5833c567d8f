// Runs the command-line tool as a subprocess.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <openssl/evp.h>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"

#ifndef GKPSIM_CLI_PATH
#error "GKPSIM_CLI_PATH must point at the gkpsim executable"
#endif

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

struct ScratchRoot {
  fs::path path;
  ScratchRoot() : path(fs::temp_directory_path() / ("gkp_cli_test_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchRoot() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& root() {
  static const ScratchRoot r;
  return r.path;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run gkpsim(const std::string& args) {
  static int counter = 0;
  const fs::path out = root() / ("stdout_" + std::to_string(counter));
  const fs::path err = root() / ("stderr_" + std::to_string(counter++));
  const std::string cmd = std::string(GKPSIM_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string sha256(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

// Last line of stderr parsed as the machine-readable error.
json error_of(const Run& r) {
  std::string line;
  std::istringstream in(r.err);
  std::string last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

}  // namespace

TEST_CASE("params reports the tabulated columns and records the default mass") {
  const fs::path dir = root() / "params_lattice";
  const Run r = gkpsim("params --trap lattice --depth-mK 1.5 --waist-um 20 --wavelength-nm 1040 --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kHz") != std::string::npos);
  const json p = load_json(dir / "params.json");
  CHECK(std::abs(p["f_z_khz"].get<double>() / 6.0 - 1) < 0.02);
  CHECK(std::abs(p["f_x_khz"].get<double>() / 362.0 - 1) < 0.02);
  const json m = load_json(dir / "manifest.json");
  CHECK(m["config"]["mass_u"] == 87.906);
  CHECK(m["status"] == "ok");
  CHECK(m.contains("version"));

  const fs::path tw = root() / "params_tweezer";
  REQUIRE(gkpsim("params --trap tweezer --waist-nm 500 --out " + tw.string()).code == 0);
  const json t = load_json(tw / "params.json");
  CHECK(std::abs(t["f_z_khz"].get<double>() / 112.0 - 1) < 0.02);
  CHECK(std::abs(t["eta_z"].get<double>() / 90e-5 - 1) < 0.02);
  // The paraxial warning reaches the manifest.
  CHECK(load_json(tw / "manifest.json")["warnings"].size() == 1);
}

TEST_CASE("configuration errors exit with code 2 and a JSON message") {
  const fs::path cfg = root() / "bad.json";
  std::ofstream(cfg) << R"({"trap": "lattice", "bogus": 1})";
  const Run r = gkpsim("--config " + cfg.string() + " params --out " + (root() / "bad").string());
  CHECK(r.code == 2);
  const json e = error_of(r);
  CHECK(e["error"]["exit_code"] == 2);
  CHECK(e["error"]["message"].get<std::string>().find("'bogus'") != std::string::npos);

  CHECK(gkpsim("prepare-ideal --dim 0 --out " + (root() / "dim0").string()).code == 2);
  CHECK(gkpsim("params --trap ring --out " + (root() / "ring").string()).code == 2);
  CHECK(gkpsim("params --no-such-flag").code == 2);
  CHECK(gkpsim("sweep").code == 2);

  std::ofstream(root() / "broken.json") << "{not json";
  CHECK(gkpsim("--config " + (root() / "broken.json").string() + " params").code == 2);
}

TEST_CASE("I/O failures exit with code 4 and still leave a manifest") {
  const fs::path dir = root() / "missing_state";
  const Run r = gkpsim("wigner --state /nonexistent/state.gkps --out " + dir.string());
  CHECK(r.code == 4);
  CHECK(error_of(r)["error"]["status"] == "io-error");
  const json m = load_json(dir / "manifest.json");
  CHECK(m["status"] != "ok");
  CHECK(m["error"]["exit_code"] == 4);
}

TEST_CASE("identical runs give byte-identical data files and matching hashes") {
  const std::string args = "prepare-ideal --delta-init 0.3 --rounds 2 --dim 60";
  const fs::path a = root() / "ideal_a", b = root() / "ideal_b";
  REQUIRE(gkpsim(args + " --out " + a.string()).code == 0);
  REQUIRE(gkpsim("--out " + b.string() + " " + args).code == 0);
  const json ma = load_json(a / "manifest.json");
  const json mb = load_json(b / "manifest.json");
  REQUIRE(ma["outputs"].size() >= 4);
  for (const auto& o : ma["outputs"]) {
    const std::string name = o["path"];
    const std::string bytes = slurp(a / name);
    CHECK(o["sha256"] == sha256(bytes));
    CHECK(o["bytes"] == bytes.size());
    CHECK(slurp(b / name) == bytes);
  }
  CHECK(ma["outputs"] == mb["outputs"]);
  const std::string csv = slurp(a / "wigner_final.csv");
  CHECK(csv.rfind("p\\q,", 0) == 0);

  const json rounds = load_json(a / "rounds.json");
  REQUIRE(rounds.size() == 2);
  CHECK(std::abs(rounds[1]["delta_x"].get<double>() - 0.3321) < 2e-3);
}

TEST_CASE("saved states feed the wigner and qec-round commands") {
  const fs::path src = root() / "qec_src";
  REQUIRE(gkpsim("qec-round --dim 80 --code-delta 0.35 --rounds 1 --quadrature q --out " + src.string()).code == 0);
  const fs::path state = src / "final_state.gkps";
  REQUIRE(fs::exists(state));

  const fs::path w = root() / "wigner";
  REQUIRE(gkpsim("wigner --state " + state.string() + " --points 21 --q-min -3 --q-max 3 --p-min -3 --p-max 3 --out " +
                 w.string())
              .code == 0);
  const std::string csv = slurp(w / "wigner.csv");
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 22);
  CHECK(fs::exists(w / "wigner.svg"));

  const fs::path again = root() / "qec_again";
  REQUIRE(gkpsim("qec-round --state " + state.string() + " --out " + again.string()).code == 0);
  CHECK(load_json(again / "rounds.json").size() == 2);
}

TEST_CASE("optimize-deltas writes a schedule that prepare-ideal accepts") {
  const fs::path opt = root() / "opt";
  REQUIRE(gkpsim("optimize-deltas --rounds 2 --dim 80 --out " + opt.string()).code == 0);
  const json s = load_json(opt / "schedule.json");
  REQUIRE(s["deltas"].size() == 2);
  CHECK(std::abs(s["deltas"][1].get<double>() - 0.5) < 0.01);
  const fs::path prep = root() / "prep_from_schedule";
  REQUIRE(gkpsim("prepare-ideal --rounds 2 --dim 60 --schedule-file " + (opt / "schedule.json").string() + " --out " +
                 prep.string())
              .code == 0);
}

TEST_CASE("sweep fans out isolated runs") {
  const fs::path cfg = root() / "sweep.json";
  std::ofstream(cfg) << R"({"command": "params", "base": {"trap": "tweezer"}, "grid": {"depth_mK": [1.0, 1.5], "waist_nm": [400, 500]}, "workers": 2})";
  const fs::path dir = root() / "sweep";
  const Run r = gkpsim("--config " + cfg.string() + " --out " + dir.string() + " sweep");
  REQUIRE(r.code == 0);
  for (int i = 0; i < 4; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "run_%04d", i);
    CHECK(fs::exists(dir / name / "params.json"));
  }
  const json m = load_json(dir / "manifest.json");
  CHECK(m["summary"]["runs"].size() == 4);

  std::ofstream(root() / "sweep_bad.json") << R"({"command": "params", "grid": {"depth": [1.0]}})";
  CHECK(gkpsim("--config " + (root() / "sweep_bad.json").string() + " --out " + (root() / "sweep_bad").string() + " sweep")
            .code == 2);
}

TEST_CASE("physical preparation rejects an inconsistent model selection") {
  const Run r = gkpsim("prepare-physical --harmonic --out " + (root() / "phys_bad").string());
  CHECK(r.code == 2);
  CHECK(error_of(r)["error"]["message"].get<std::string>().find("expansion") != std::string::npos);
}
