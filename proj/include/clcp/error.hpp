#pragma once

#include <stdexcept>
#include <string>

namespace clcp {

enum class errc {
  empty_input,
  delta_too_small,
  infeasible,
  degenerate_data,
  empty_truth,
  nesting_violation,
  filter_exhausted,
  grid_does_not_cover,
  parse_error,
  kind_mismatch,
  dimension_mismatch,
  invalid_argument,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::empty_input: return "EMPTY_INPUT";
    case errc::delta_too_small: return "DELTA_TOO_SMALL";
    case errc::infeasible: return "INFEASIBLE";
    case errc::degenerate_data: return "DEGENERATE_DATA";
    case errc::empty_truth: return "EMPTY_TRUTH";
    case errc::nesting_violation: return "NESTING_VIOLATION";
    case errc::filter_exhausted: return "FILTER_EXHAUSTED";
    case errc::grid_does_not_cover: return "GRID_DOES_NOT_COVER";
    case errc::parse_error: return "PARSE_ERROR";
    case errc::kind_mismatch: return "KIND_MISMATCH";
    case errc::dimension_mismatch: return "DIMENSION_MISMATCH";
    case errc::invalid_argument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace clcp
