#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gkp {

enum class ErrorCode {
  invalid_dimension,
  invalid_input,
  invalid_parameters,
  degenerate_postselection,
  numeric_failure,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

// Non-fatal findings (truncation leakage, cutoff violations, fallbacks).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
  void merge(const Diagnostics& other) {
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  }
};

inline void warn_to(Diagnostics* diag, std::string msg) {
  if (diag) diag->warn(std::move(msg));
}

}  // namespace gkp
