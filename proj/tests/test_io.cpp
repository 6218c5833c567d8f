#include <cmath>
#include <filesystem>
#include <functional>

#include <unistd.h>

#include "doctest.h"
#include "gkp/io.hpp"

using namespace gkp;
using namespace gkp::io;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_input;
}

std::filesystem::path scratch_dir() {
  const auto d = std::filesystem::temp_directory_path() / ("gkp_io_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("state container round trip") {
  const OscState pure = finite_gkp_superposition(Logical::plus, 0.35, -1, 60);
  json meta;
  const std::string bytes = encode_state(pure, {{"origin", "test"}});
  CHECK(bytes.compare(0, 8, std::string(kStateMagic, 8)) == 0);
  const OscState back = decode_state(bytes, &meta);
  CHECK(back.is_pure());
  CHECK(back.amplitudes == pure.amplitudes);
  CHECK(meta["origin"] == "test");

  const OscState mixed = OscState::mixed(pure.density_matrix(), ModeShape{true, {3, 10}});
  const OscState mback = decode_state(encode_state(mixed));
  CHECK(!mback.is_pure());
  CHECK(mback.density == mixed.density);
  CHECK(mback.shape.ancilla);
  CHECK(mback.shape.modes == std::vector<int>{3, 10});

  const auto dir = scratch_dir();
  const std::string path = (dir / "sub" / "s.gkps").string();
  save_state(path, pure);
  CHECK(load_state(path).amplitudes == pure.amplitudes);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt state containers are rejected") {
  const std::string good = encode_state(vacuum(8));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { decode_state(bad_magic); }) == ErrorCode::io_error);

  std::string bad_version = good;
  bad_version[8] = 2;
  CHECK(code_of([&] { decode_state(bad_version); }) == ErrorCode::io_error);

  CHECK(code_of([&] { decode_state(good.substr(0, good.size() - 3)); }) == ErrorCode::io_error);
  CHECK(code_of([&] { decode_state(good + "xx"); }) == ErrorCode::io_error);
  CHECK(code_of([&] { decode_state(good.substr(0, 10)); }) == ErrorCode::io_error);
  CHECK(code_of([&] { load_state("/nonexistent/dir/state.gkps"); }) == ErrorCode::io_error);
}

TEST_CASE("number formatting is shortest round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5e-12) == "-2.5e-12");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("Wigner CSV layout") {
  const auto q = linspace(-1, 1, 3);
  const auto p = linspace(-0.5, 0.5, 2);
  const WignerGrid g = wigner(vacuum(20), q, p);
  const std::string csv = wigner_csv(g);
  const std::string first = csv.substr(0, csv.find('\n'));
  CHECK(first == "p\\q,-1,0,1");
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 3);
  CHECK(csv.find("\n-0.5,") != std::string::npos);
  CHECK(wigner_csv(wigner(vacuum(20), q, p)) == csv);

  const json side = wigner_sidecar(g, vacuum(20));
  CHECK(side["q"]["points"] == 3);
  CHECK(side["p"]["points"] == 2);
  CHECK(side.contains("convention"));

  const std::string svg = wigner_svg(g, "vacuum");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("delta schedule JSON") {
  const DeltaSchedule s = DeltaSchedule::preparation({1.0, 0.5, 0.31});
  const DeltaSchedule back = delta_schedule_from_json(delta_schedule_json(s));
  CHECK(back.deltas == s.deltas);
  CHECK(back.epsilons == s.epsilons);
  const DeltaSchedule no_eps = delta_schedule_from_json(json{{"deltas", {0.4}}});
  CHECK(no_eps.epsilons == std::vector<double>{0.0});
  CHECK(code_of([] { delta_schedule_from_json(json{{"deltas", "x"}}); }) == ErrorCode::invalid_input);
  CHECK_THROWS_AS(delta_schedule_from_json(json{{"deltas", {0.4}}, {"epsilons", {0.1, 0.2}}}), Error);
}

TEST_CASE("physical configuration JSON") {
  const LatticeRunConfig def;
  const LatticeRunConfig back = lattice_config_from_json(lattice_config_to_json(def));
  CHECK(std::abs(back.trap.depth - def.trap.depth) <= 1e-12 * def.trap.depth);
  CHECK(std::abs(back.peak_u1 - def.peak_u1) <= 1e-12 * def.peak_u1);
  CHECK(back.squeeze_dims == def.squeeze_dims);
  CHECK(back.schedule.deltas == def.schedule.deltas);
  CHECK(back.hold_time < 0);
  CHECK(lattice_config_to_json(back) == lattice_config_to_json(def));

  const LatticeRunConfig c = lattice_config_from_json(
      json{{"squeeze_dims", {36}}, {"mixed_dims", {36}}, {"hold_us", 100}, {"evolution", {{"max_step_s", 1e-7}}}});
  CHECK(c.squeeze_dims == std::vector<int>{36});
  CHECK(std::abs(c.hold_time - 100e-6) < 1e-18);
  CHECK(c.evolution.max_step == 1e-7);

  try {
    lattice_config_from_json(json{{"bogus", 1}});
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_parameters);
    CHECK(std::string(e.what()).find("'bogus'") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(lattice_config_from_json(json{{"evolution", {{"speed", 1}}}}),
                       doctest::Contains("evolution.speed"), Error);
  CHECK_THROWS_WITH_AS(lattice_config_from_json(json{{"ramp_us", "long"}}), doctest::Contains("wrong type"), Error);
  CHECK_THROWS_AS(lattice_config_from_json(json{{"squeeze_dims", {8, 8, 36}}, {"mixed_dims", {9, 3, 36}}}), Error);
  CHECK_THROWS_AS(lattice_config_from_json(json::array()), Error);
}

TEST_CASE("parameter exports") {
  const OscillatorParams p = tweezer_params(TweezerSpec::reference());
  const json j = params_json(p);
  CHECK(std::abs(j["f_z_hz"].get<double>() - p.omega_z / (2 * kPi)) < 1e-9);
  const std::string table = params_table(p, "tweezer");
  CHECK(table.find("tweezer") != std::string::npos);
  CHECK(table.find("kHz") != std::string::npos);
}

TEST_CASE("atomic writes replace the target") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "a.txt").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  CHECK(read_file(path) == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
}
