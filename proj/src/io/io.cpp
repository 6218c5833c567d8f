#include "gkp/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gkp::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "state container assumes a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

ModeShape shape_from_json(const json& h) {
  ModeShape s;
  s.ancilla = h.at("ancilla").get<bool>();
  s.modes = h.at("modes").get<std::vector<int>>();
  s.validate();
  return s;
}

}  // namespace

std::string encode_state(const OscState& state, const json& metadata) {
  json h;
  h["kind"] = state.is_pure() ? "pure" : "mixed";
  h["ancilla"] = state.shape.ancilla;
  h["modes"] = state.shape.modes;
  h["dim"] = state.dim();
  h["layout"] = state.is_pure() ? "vector" : "column-major";
  h["scalar"] = "complex128-le";
  h["norm_tol"] = state.norm_tol;
  h["metadata"] = metadata;
  const std::string header = h.dump();

  const cplx* data = state.is_pure() ? state.amplitudes.data() : state.density.data();
  const size_t count = state.is_pure() ? static_cast<size_t>(state.amplitudes.size())
                                       : static_cast<size_t>(state.density.size());
  std::string out(kStateMagic, kStateMagic + 8);
  put_u32(out, kStateVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  const size_t off = out.size();
  out.resize(off + count * sizeof(cplx));
  std::memcpy(out.data() + off, data, count * sizeof(cplx));
  return out;
}

OscState decode_state(const std::string& bytes, json* metadata) {
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kStateMagic, 8) == 0, ErrorCode::io_error,
          "not a state container (bad magic)");
  const std::uint32_t version = get_u32(bytes, 8);
  require(version == kStateVersion, ErrorCode::io_error,
          "unsupported state container version " + std::to_string(version));
  const std::uint32_t hlen = get_u32(bytes, 12);
  require(bytes.size() >= 16 + static_cast<size_t>(hlen), ErrorCode::io_error, "truncated state header");
  json h;
  try {
    h = json::parse(bytes.substr(16, hlen));
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("state header is not valid JSON: ") + e.what());
  }
  ModeShape shape;
  std::string kind;
  double norm_tol = 1e-9;
  try {
    shape = shape_from_json(h);
    kind = h.at("kind").get<std::string>();
    norm_tol = h.value("norm_tol", 1e-9);
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("state header is incomplete: ") + e.what());
  }
  require(kind == "pure" || kind == "mixed", ErrorCode::io_error, "unknown state kind '" + kind + "'");
  const Eigen::Index n = shape.total();
  const size_t count = kind == "pure" ? static_cast<size_t>(n) : static_cast<size_t>(n * n);
  const size_t off = 16 + hlen;
  require(bytes.size() == off + count * sizeof(cplx), ErrorCode::io_error, "state payload has the wrong length");
  if (metadata) *metadata = h.value("metadata", json::object());
  OscState s;
  if (kind == "pure") {
    Vector v(n);
    std::memcpy(v.data(), bytes.data() + off, count * sizeof(cplx));
    s = OscState::pure(std::move(v), shape);
  } else {
    Matrix m(n, n);
    std::memcpy(m.data(), bytes.data() + off, count * sizeof(cplx));
    s = OscState::mixed(std::move(m), shape);
  }
  s.norm_tol = norm_tol;
  return s;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    require(!ec, ErrorCode::io_error, "cannot create directory " + target.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    require(static_cast<bool>(f), ErrorCode::io_error, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require(!ec, ErrorCode::io_error, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void save_state(const std::string& path, const OscState& state, const json& metadata) {
  write_file_atomic(path, encode_state(state, metadata));
}

OscState load_state(const std::string& path, json* metadata) { return decode_state(read_file(path), metadata); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// Wigner export ------------------------------------------------------------------

std::string wigner_csv(const WignerGrid& grid) {
  std::string out = "p\\q";
  for (double q : grid.q) out += "," + format_number(q);
  out += "\n";
  for (size_t i = 0; i < grid.p.size(); ++i) {
    out += format_number(grid.p[i]);
    for (size_t j = 0; j < grid.q.size(); ++j)
      out += "," + format_number(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out += "\n";
  }
  return out;
}

json wigner_sidecar(const WignerGrid& grid, const OscState& state) {
  json j;
  j["convention"] = kWignerConvention;
  j["q"] = {{"min", grid.q.front()}, {"max", grid.q.back()}, {"points", grid.q.size()}};
  j["p"] = {{"min", grid.p.front()}, {"max", grid.p.back()}, {"points", grid.p.size()}};
  j["layout"] = "rows follow p, columns follow q";
  j["truncation"] = {{"modes", state.shape.modes}, {"ancilla", state.shape.ancilla}, {"kind", state.is_pure() ? "pure" : "mixed"}};
  double integral = 0.0;
  if (grid.q.size() > 1 && grid.p.size() > 1) {
    const double dq = (grid.q.back() - grid.q.front()) / (grid.q.size() - 1.0);
    const double dp = (grid.p.back() - grid.p.front()) / (grid.p.size() - 1.0);
    integral = grid.values.sum() * dq * dp;
  }
  j["grid_integral"] = integral;
  j["min"] = grid.values.size() ? grid.values.minCoeff() : 0.0;
  j["max"] = grid.values.size() ? grid.values.maxCoeff() : 0.0;
  return j;
}

std::string wigner_svg(const WignerGrid& grid, const std::string& title) {
  const int nq = static_cast<int>(grid.q.size()), np = static_cast<int>(grid.p.size());
  const int cell = std::max(2, 600 / std::max(1, std::max(nq, np)));
  const int margin = 40;
  const int w = nq * cell + 2 * margin, h = np * cell + 2 * margin;
  const double scale = std::max(1e-300, grid.values.size() ? grid.values.cwiseAbs().maxCoeff() : 1.0);
  auto colour = [&](double v) {
    const double t = std::clamp(v / scale, -1.0, 1.0);
    int r, g, b;
    if (t >= 0) {
      r = 255;
      g = b = static_cast<int>(std::lround(255 * (1 - t)));
    } else {
      b = 255;
      r = g = static_cast<int>(std::lround(255 * (1 + t)));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << " " << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) s << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  s << "<g shape-rendering=\"crispEdges\">\n";
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) {
      // p increases upward.
      const int x = margin + j * cell, y = margin + (np - 1 - i) * cell;
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << colour(grid.values(i, j)) << "\"/>\n";
    }
  s << "</g>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" font-family=\"sans-serif\" font-size=\"12\">q</text>\n";
  s << "<text x=\"10\" y=\"" << h / 2 << "\" font-family=\"sans-serif\" font-size=\"12\">p</text>\n";
  s << "</svg>\n";
  return s.str();
}

// Trajectories and schedules --------------------------------------------------------

std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "time_s,delta_x,delta_z,ground_pop,leakage,stage\n";
  for (int i = 0; i < tr.size(); ++i) {
    out += format_number(tr.times[i]) + "," + format_number(tr.delta_x[i]) + "," + format_number(tr.delta_z[i]) + "," +
           format_number(tr.spectator_ground_pop[i]) + "," + format_number(tr.leakage[i]) + "," + tr.stage[i] + "\n";
  }
  return out;
}

json rounds_json(const std::vector<RoundRecord>& rounds) {
  json arr = json::array();
  for (const auto& r : rounds) {
    arr.push_back({{"round", r.round},
                   {"delta", r.delta},
                   {"epsilon", r.epsilon},
                   {"delta_x", r.delta_x},
                   {"delta_z", r.delta_z},
                   {"trace", r.trace},
                   {"leakage", r.leakage},
                   {"success_prob", r.success_prob},
                   {"mean_q", r.mean_q}});
  }
  return arr;
}

json schedule_json(const PulseSchedule& schedule) {
  json arr = json::array();
  for (const auto& s : schedule.segments) {
    json j = {{"kind", to_string(s.kind)}, {"start_s", s.start}, {"duration_s", s.duration}, {"label", s.label}};
    switch (s.kind) {
      case SegmentKind::depth_ramp:
        j["from_factor"] = s.from_factor;
        j["target_factor"] = s.target_factor;
        j["profile"] = "linear";
        break;
      case SegmentKind::tuneout_pulse:
        j["beams"] = json::array();
        if (s.beams & kBeamA) j["beams"].push_back("A");
        if (s.beams & kBeamB) j["beams"].push_back("B");
        j["peak_u1_J"] = s.peak_u1;
        j["waist_w1_m"] = s.waist_w1;
        j["offset_m"] = s.offset;
        j["ancilla_phase_rad"] = s.ancilla_phase;
        break;
      case SegmentKind::ancilla_rotation:
        j["axis"] = s.axis;
        j["angle_rad"] = s.angle;
        j["rabi_rad_s"] = s.rabi;
        break;
      default: break;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

json delta_schedule_json(const DeltaSchedule& schedule) {
  return {{"deltas", schedule.deltas}, {"epsilons", schedule.epsilons}};
}

DeltaSchedule delta_schedule_from_json(const json& j) {
  DeltaSchedule s;
  try {
    s.deltas = j.at("deltas").get<std::vector<double>>();
    s.epsilons = j.contains("epsilons") ? j.at("epsilons").get<std::vector<double>>()
                                        : std::vector<double>(s.deltas.size(), 0.0);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad delta schedule: ") + e.what());
  }
  s.validate();
  return s;
}

json params_json(const OscillatorParams& p) {
  const double two_pi = 2.0 * kPi;
  return {{"omega_x_rad_s", p.omega_x},
          {"omega_y_rad_s", p.omega_y},
          {"omega_z_rad_s", p.omega_z},
          {"f_x_hz", p.omega_x / two_pi},
          {"f_y_hz", p.omega_y / two_pi},
          {"f_z_hz", p.omega_z / two_pi},
          {"eta_z", p.eta_z},
          {"eta_x", p.eta_x},
          {"eta_y", p.eta_y},
          {"eps_zx", p.eps_zx},
          {"eps_zy", p.eps_zy},
          {"eps_xy", p.eps_xy},
          {"depth_J", p.depth},
          {"mass_kg", p.mass}};
}

std::string params_table(const OscillatorParams& p, const std::string& label) {
  const double two_pi = 2.0 * kPi;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-16s %s\n"
                "%-16s %12.3f kHz\n"
                "%-16s %12.3f kHz\n"
                "%-16s %12.3e\n"
                "%-16s %12.3e\n"
                "%-16s %12.3e\n"
                "%-16s %12.3e\n",
                "parameter", label.c_str(), "omega_z / 2pi", p.omega_z / two_pi / 1e3, "omega_x,y / 2pi",
                p.omega_x / two_pi / 1e3, "eta_z", p.eta_z, "eta_x", p.eta_x, "eps_zx", p.eps_zx, "eps_xy", p.eps_xy);
  return buf;
}

json diagnostics_json(const Diagnostics& diag) { return diag.warnings; }

namespace {

const double kTwoPi = 2.0 * kPi;

json evolution_json(const EvolutionConfig& e) {
  return {{"step_tol", e.step_tol},   {"max_step_s", e.max_step}, {"guard_band", e.guard_band},
          {"leak_warn", e.leak_warn}, {"krylov_tol", e.krylov_tol}, {"krylov_dim", e.krylov_dim}};
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_parameters, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace

json lattice_config_to_json(const LatticeRunConfig& c) {
  json j;
  j["depth_mK"] = c.trap.depth / constants::k_B * 1e3;
  j["waist_um"] = c.trap.waist * 1e6;
  j["wavelength_nm"] = c.trap.wavelength * 1e9;
  j["mass_u"] = c.trap.mass / constants::amu;
  j["theta_deg"] = c.trap.theta * 180.0 / kPi;
  j["potential"] = to_string(c.potential);
  j["displacement"] = to_string(c.displacement);
  j["harmonic"] = c.harmonic;
  j["squeeze_dims"] = c.squeeze_dims;
  j["mixed_dims"] = c.mixed_dims;
  j["depth_factor"] = c.depth_factor;
  j["ramp_us"] = c.ramp_time * 1e6;
  j["hold_us"] = c.hold_time < 0 ? json(nullptr) : json(c.hold_time * 1e6);
  j["peak_u1_mhz"] = c.peak_u1 / constants::hbar / kTwoPi / 1e6;
  j["waist_w1_um"] = c.waist_w1 * 1e6;
  j["deltas"] = c.schedule.deltas;
  j["epsilons"] = c.schedule.epsilons;
  j["rabi_khz"] = c.rabi / kTwoPi / 1e3;
  j["reset_us"] = c.reset_time * 1e6;
  j["sample_squeeze_us"] = c.sample_squeeze * 1e6;
  j["sample_mixed_us"] = c.sample_mixed * 1e6;
  j["evolution"] = evolution_json(c.evolution);
  return j;
}

LatticeRunConfig lattice_config_from_json(const json& j) {
  require(j.is_object(), ErrorCode::invalid_parameters, "physical config must be a JSON object");
  LatticeRunConfig c;
  bool has_eps = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "depth_mK") c.trap.depth = kelvin_to_joule(get_as<double>(v, key) * 1e-3);
    else if (key == "waist_um") c.trap.waist = get_as<double>(v, key) * 1e-6;
    else if (key == "wavelength_nm") c.trap.wavelength = get_as<double>(v, key) * 1e-9;
    else if (key == "mass_u") c.trap.mass = amu_to_kg(get_as<double>(v, key));
    else if (key == "theta_deg") c.trap.theta = get_as<double>(v, key) * kPi / 180.0;
    else if (key == "potential") c.potential = parse_potential_model(get_as<std::string>(v, key));
    else if (key == "displacement") c.displacement = parse_displacement_mode(get_as<std::string>(v, key));
    else if (key == "harmonic") c.harmonic = get_as<bool>(v, key);
    else if (key == "squeeze_dims") c.squeeze_dims = get_as<std::vector<int>>(v, key);
    else if (key == "mixed_dims") c.mixed_dims = get_as<std::vector<int>>(v, key);
    else if (key == "depth_factor") c.depth_factor = get_as<double>(v, key);
    else if (key == "ramp_us") c.ramp_time = get_as<double>(v, key) * 1e-6;
    else if (key == "hold_us") c.hold_time = v.is_null() ? -1.0 : get_as<double>(v, key) * 1e-6;
    else if (key == "peak_u1_mhz") c.peak_u1 = constants::hbar * kTwoPi * 1e6 * get_as<double>(v, key);
    else if (key == "waist_w1_um") c.waist_w1 = get_as<double>(v, key) * 1e-6;
    else if (key == "deltas") c.schedule.deltas = get_as<std::vector<double>>(v, key);
    else if (key == "epsilons") {
      c.schedule.epsilons = get_as<std::vector<double>>(v, key);
      has_eps = true;
    } else if (key == "rabi_khz") c.rabi = kTwoPi * 1e3 * get_as<double>(v, key);
    else if (key == "reset_us") c.reset_time = get_as<double>(v, key) * 1e-6;
    else if (key == "sample_squeeze_us") c.sample_squeeze = get_as<double>(v, key) * 1e-6;
    else if (key == "sample_mixed_us") c.sample_mixed = get_as<double>(v, key) * 1e-6;
    else if (key == "evolution") {
      require(v.is_object(), ErrorCode::invalid_parameters, "config key 'evolution' must be an object");
      for (const auto& [ek, ev] : v.items()) {
        const std::string name = "evolution." + ek;
        if (ek == "step_tol") c.evolution.step_tol = get_as<double>(ev, name);
        else if (ek == "max_step_s") c.evolution.max_step = get_as<double>(ev, name);
        else if (ek == "guard_band") c.evolution.guard_band = get_as<int>(ev, name);
        else if (ek == "leak_warn") c.evolution.leak_warn = get_as<double>(ev, name);
        else if (ek == "krylov_tol") c.evolution.krylov_tol = get_as<double>(ev, name);
        else if (ek == "krylov_dim") c.evolution.krylov_dim = get_as<int>(ev, name);
        else fail(ErrorCode::invalid_parameters, "unknown config key '" + name + "'");
      }
    } else {
      fail(ErrorCode::invalid_parameters, "unknown config key '" + key + "'");
    }
  }
  if (!has_eps) c.schedule.epsilons.assign(c.schedule.deltas.size(), 0.0);
  c.validate();
  return c;
}

}  // namespace gkp::io
