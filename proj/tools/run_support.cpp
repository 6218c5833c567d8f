#include "run_support.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cli {

namespace fs = std::filesystem;

void config_error(const std::string& message) { throw CliError{kExitConfig, "config-error", message}; }
void io_error(const std::string& message) { throw CliError{kExitIo, "io-error", message}; }

int exit_code_for(gkpsim_status status) {
  switch (status) {
    case GKPSIM_OK: return kExitOk;
    case GKPSIM_ERR_INVALID_ARGUMENT:
    case GKPSIM_ERR_INVALID_DIMENSION:
    case GKPSIM_ERR_INVALID_PARAMETERS: return kExitConfig;
    case GKPSIM_ERR_IO: return kExitIo;
    default: return kExitNumeric;
  }
}

void check(gkpsim_status status) {
  if (status == GKPSIM_OK) return;
  throw CliError{exit_code_for(status), gkpsim_status_name(status), gkpsim_last_error()};
}

std::string error_json(const CliError& e) {
  json j = {{"error", {{"status", e.status}, {"exit_code", e.exit_code}, {"message", e.message}}}};
  return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw CliError{kExitNumeric, "internal-error", "SHA-256 digest failed"};
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) io_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) io_error("cannot create " + target.parent_path().string() + ": " + ec.message());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) io_error("cannot open " + tmp + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) io_error("write failed for " + tmp);
  }
  fs::rename(tmp, target, ec);
  if (ec) io_error("cannot move " + tmp + " into place: " + ec.message());
}

namespace {

void overlay(json& base, const json& src, const std::string& prefix) {
  if (!src.is_object()) config_error("config " + (prefix.empty() ? std::string("root") : "'" + prefix + "'") + " must be an object");
  for (const auto& [key, v] : src.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) config_error("unknown config key '" + name + "'");
    json& slot = base[key];
    if (slot.is_object() && !v.is_null()) overlay(slot, v, name);
    else slot = v;
  }
}

}  // namespace

json resolve_config(const json& defaults, const json& file, const json& flags) {
  json out = defaults;
  if (!file.is_null()) overlay(out, file, "");
  if (!flags.is_null()) overlay(out, flags, "");
  return out;
}

json load_config_file(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    config_error("config file " + path + " is not valid JSON: " + e.what());
  }
}

std::string output_dir_for(const std::string& explicit_dir, const std::string& command) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* root = std::getenv("GKPSIM_OUTPUT_ROOT"); root && *root) return (fs::path(root) / command).string();
  return (fs::path("gkpsim-out") / command).string();
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  gkpsim_string_free(s);
  return out;
}

RunContext::RunContext(std::string command, std::string dir, json config)
    : command_(std::move(command)), dir_(std::move(dir)), config_(std::move(config)), started_(utc_timestamp()) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) io_error("cannot create output directory " + dir_ + ": " + ec.message());
}

std::string RunContext::path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

void RunContext::write_text(const std::string& name, const std::string& content) {
  write_atomic(path(name), content);
  outputs_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
}

void RunContext::register_file(const std::string& name) {
  const std::string content = read_text(path(name));
  outputs_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
}

void RunContext::add_result_warnings(const gkpsim_result* r) {
  int n = 0;
  check(gkpsim_result_warning_count(r, &n));
  for (int i = 0; i < n; ++i) {
    char* w = nullptr;
    check(gkpsim_result_warning(r, i, &w));
    warnings_.push_back(take_string(w));
  }
}

json RunContext::manifest(const std::string& status) const {
  json m;
  m["tool"] = "gkpsim";
  m["version"] = gkpsim_version();
  m["command"] = command_;
  m["status"] = status;
  m["config"] = config_;
  m["started_at"] = started_;
  m["finished_at"] = utc_timestamp();
  m["warnings"] = warnings_;
  m["outputs"] = outputs_;
  if (!summary_.is_null()) m["summary"] = summary_;
  if (!error_.is_null()) m["error"] = error_;
  return m;
}

void RunContext::finish() { write_atomic(path("manifest.json"), manifest("ok").dump(2) + "\n"); }

void RunContext::fail(const CliError& e) {
  error_ = {{"status", e.status}, {"exit_code", e.exit_code}, {"message", e.message}};
  try {
    write_atomic(path("manifest.json"), manifest("error").dump(2) + "\n");
  } catch (const CliError&) {
    // The original error is the one worth reporting.
  }
}

}  // namespace cli
