#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accent_eval::align {

struct PhoneInterval {
  std::string label;
  double start = 0.0;
  double end = 0.0;

  double midpoint() const { return 0.5 * (start + end); }
};

struct AlignmentTier {
  std::string name;
  std::vector<PhoneInterval> intervals;

  friend bool operator==(const AlignmentTier&, const AlignmentTier&) = default;
};

inline bool operator==(const PhoneInterval& a, const PhoneInterval& b) {
  return a.label == b.label && a.start == b.start && a.end == b.end;
}

struct VowelToken {
  std::string base_label;
  double midpoint = 0.0;
  std::size_t source_index = 0;

  friend bool operator==(const VowelToken&, const VowelToken&) = default;
};

/// Parses a Praat TextGrid in long or short text format. Accepts UTF-8 (with
/// or without BOM) and UTF-16 LE/BE with BOM. Returns every IntervalTier;
/// point tiers are skipped. Gaps between intervals are filled with empty
/// labels so that each tier covers its span contiguously.
std::vector<AlignmentTier> parse_textgrid(std::string_view text);
std::vector<AlignmentTier> parse_textgrid_file(const std::string& path);

/// Returns the tier with the given name or throws Errc::not_found.
const AlignmentTier& find_tier(const std::vector<AlignmentTier>& tiers, std::string_view name);

/// The 15 ARPABET vowels of the english_us_arpa dictionary.
const std::set<std::string>& default_vowel_inventory();

/// Strips trailing stress digits and upper-cases ASCII ("ah0" -> "AH").
std::string base_phone(std::string_view label);

bool is_silence(std::string_view label);

struct VowelOptions {
  std::set<std::string> inventory = default_vowel_inventory();
  /// Drop AH0 (unstressed schwa).
  bool exclude_reduced = false;
};

std::vector<VowelToken> extract_vowels(const AlignmentTier& tier, const VowelOptions& options = {});

/// Global alignment of the two base-label sequences (match 0, mismatch 1,
/// gap 1). Only identical-label matches are returned, in order. Traceback
/// ties are broken symmetrically so pair(a, b) mirrors pair(b, a).
std::vector<std::pair<VowelToken, VowelToken>> pair_vowel_tokens(const std::vector<VowelToken>& a,
                                                                  const std::vector<VowelToken>& b);

}  // namespace accent_eval::align
