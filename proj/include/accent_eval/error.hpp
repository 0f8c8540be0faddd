#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace accent_eval {

enum class Errc {
  parse,
  unsupported_format,
  validation,
  empty_input,
  degenerate_input,
  undefined_metric,
  incompatible_inputs,
  precondition,
  formant_extraction_failed,
  degenerate_normalization,
  config,
  not_found,
  conflict,
  state,
};

const char* to_string(Errc code) noexcept;

/// Stable snake_case identifier, used in machine-readable error bodies.
const char* code_name(Errc code) noexcept;

/// Every failure raised by the toolkit carries one of the codes above so
/// callers (CLI exit codes, HTTP status mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Parse failure with an optional 1-based line number (0 when the format is
/// binary or the position is unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(Errc::parse, line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace accent_eval
