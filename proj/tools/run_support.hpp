#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "gkpsim/gkpsim.h"

namespace cli {

using nlohmann::json;

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4 };

struct CliError {
  int exit_code = kExitConfig;
  std::string status;
  std::string message;
};

[[noreturn]] void config_error(const std::string& message);
[[noreturn]] void io_error(const std::string& message);
// Throws CliError built from the library's last error when status != OK.
void check(gkpsim_status status);
int exit_code_for(gkpsim_status status);
std::string error_json(const CliError& e);

std::string sha256_hex(const std::string& bytes);
std::string utc_timestamp();
std::string read_text(const std::string& path);
void write_atomic(const std::string& path, const std::string& content);

// Overlays `file` and then `flags` onto `defaults`; any key not present in
// `defaults` is rejected with a message naming it. Nested objects are
// checked recursively except where the default value is null.
json resolve_config(const json& defaults, const json& file, const json& flags);
json load_config_file(const std::string& path);

// Owns a run directory: collects outputs with their hashes and the warnings,
// then writes manifest.json atomically.
class RunContext {
 public:
  RunContext(std::string command, std::string dir, json config);

  const std::string& dir() const { return dir_; }
  std::string path(const std::string& name) const;
  void write_text(const std::string& name, const std::string& content);
  // Registers a file already written under the run directory.
  void register_file(const std::string& name);
  void add_warning(const std::string& w) { warnings_.push_back(w); }
  void add_result_warnings(const gkpsim_result* r);
  void set_summary(json s) { summary_ = std::move(s); }
  void finish();
  void fail(const CliError& e);

 private:
  json manifest(const std::string& status) const;

  std::string command_;
  std::string dir_;
  json config_;
  json summary_;
  std::string started_;
  std::vector<std::string> warnings_;
  std::vector<json> outputs_;
  json error_;
};

// Output directory: explicit value, then $GKPSIM_OUTPUT_ROOT/<command>, then
// ./gkpsim-out/<command>.
std::string output_dir_for(const std::string& explicit_dir, const std::string& command);

// RAII holders for library handles.
struct StateHandle {
  gkpsim_state* p = nullptr;
  StateHandle() = default;
  explicit StateHandle(gkpsim_state* s) : p(s) {}
  StateHandle(const StateHandle&) = delete;
  StateHandle& operator=(const StateHandle&) = delete;
  ~StateHandle() { gkpsim_state_free(p); }
};

struct ResultHandle {
  gkpsim_result* p = nullptr;
  ResultHandle() = default;
  ResultHandle(const ResultHandle&) = delete;
  ResultHandle& operator=(const ResultHandle&) = delete;
  ~ResultHandle() { gkpsim_result_free(p); }
};

// Takes ownership of a library string.
std::string take_string(char* s);

}  // namespace cli
