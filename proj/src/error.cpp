#include "accent_eval/error.hpp"

namespace accent_eval {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse error";
    case Errc::unsupported_format: return "unsupported format";
    case Errc::validation: return "validation error";
    case Errc::empty_input: return "empty input";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::undefined_metric: return "undefined metric";
    case Errc::incompatible_inputs: return "incompatible inputs";
    case Errc::precondition: return "precondition violated";
    case Errc::formant_extraction_failed: return "formant extraction failed";
    case Errc::degenerate_normalization: return "degenerate normalization";
    case Errc::config: return "configuration error";
    case Errc::not_found: return "not found";
    case Errc::conflict: return "conflict";
    case Errc::state: return "state error";
  }
  return "error";
}

const char* code_name(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::validation: return "validation";
    case Errc::empty_input: return "empty_input";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::undefined_metric: return "undefined_metric";
    case Errc::incompatible_inputs: return "incompatible_inputs";
    case Errc::precondition: return "precondition";
    case Errc::formant_extraction_failed: return "formant_extraction_failed";
    case Errc::degenerate_normalization: return "degenerate_normalization";
    case Errc::config: return "config";
    case Errc::not_found: return "not_found";
    case Errc::conflict: return "conflict";
    case Errc::state: return "state";
  }
  return "internal";
}

}  // namespace accent_eval
