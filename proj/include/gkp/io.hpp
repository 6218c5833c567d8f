#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "gkp/code.hpp"
#include "gkp/physical.hpp"
#include "gkp/protocols.hpp"
#include "gkp/trap.hpp"

namespace gkp::io {

using nlohmann::json;

// State container: 8-byte magic "GKPSTATE", u32 format version, u32 header
// length, UTF-8 JSON header, then the amplitudes (pure) or the column-major
// density matrix (mixed) as little-endian complex128 pairs (re, im).
inline constexpr char kStateMagic[8] = {'G', 'K', 'P', 'S', 'T', 'A', 'T', 'E'};
inline constexpr unsigned kStateVersion = 1;

std::string encode_state(const OscState& state, const json& metadata = json::object());
OscState decode_state(const std::string& bytes, json* metadata = nullptr);
void save_state(const std::string& path, const OscState& state, const json& metadata = json::object());
OscState load_state(const std::string& path, json* metadata = nullptr);

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Shortest round-trip decimal form; fixed so identical inputs give identical text.
std::string format_number(double v);

// CSV with a header line, one row per p value: "p\\q,q_0,q_1,...".
std::string wigner_csv(const WignerGrid& grid);
json wigner_sidecar(const WignerGrid& grid, const OscState& state);
// Self-contained SVG heatmap with a diverging colour map symmetric about 0.
std::string wigner_svg(const WignerGrid& grid, const std::string& title = "");

std::string trajectory_csv(const Trajectory& tr);
json rounds_json(const std::vector<RoundRecord>& rounds);
json schedule_json(const PulseSchedule& schedule);
json delta_schedule_json(const DeltaSchedule& schedule);
DeltaSchedule delta_schedule_from_json(const json& j);

json params_json(const OscillatorParams& p);
// Tabulated rows: frequencies in kHz (omega / 2 pi), dimensionless rest.
std::string params_table(const OscillatorParams& p, const std::string& label);

json diagnostics_json(const Diagnostics& diag);

// Lattice run configuration in practical units (mK, um, nm, kHz, MHz, us).
// Unknown keys raise invalid-parameters naming the key.
LatticeRunConfig lattice_config_from_json(const json& j);
json lattice_config_to_json(const LatticeRunConfig& c);

}  // namespace gkp::io
