#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace accent_eval::listen {

/// Candidate label. In stored answers this is always the underlying
/// candidate (A = candidate_a of the item), never the screen position.
enum class Choice { A, B };

Choice parse_choice(const std::string& s);
const char* to_string(Choice c);

struct XabItem {
  std::string item_id;
  std::string reference_audio_id;    // X
  std::string candidate_a_audio_id;
  std::string candidate_b_audio_id;
  std::string transcript;
  std::uint64_t ab_assignment_seed = 0;
};

struct AttentionItem {
  XabItem item;
  Choice expected = Choice::A;
};

struct AidQuestion {
  std::string prompt;
  std::set<std::string> accepted_keywords;  // lowercase; empty disables AID screening
};

struct TestDefinition {
  std::string test_id;
  bool show_transcript = false;
  bool require_highlight = false;
  std::string instructions;
  std::uint64_t seed = 0;
  Choice system_of_interest = Choice::A;
  std::vector<XabItem> items;
  std::vector<AttentionItem> attention_items;
  AidQuestion aid_question;
  std::size_t target_valid_submissions = 15;
  std::map<std::string, std::string> metadata;  // opaque recruitment notes
};

/// Throws Errc::validation when an invariant is violated: no items, empty or
/// duplicate ids, identical audio ids within an item, a missing transcript
/// when transcripts are shown, or a keyword that is not lowercase.
void validate(const TestDefinition& t);

/// Half-open range over the transcript's code points.
struct HighlightSpan {
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  friend bool operator==(const HighlightSpan&, const HighlightSpan&) = default;
};

/// Sorts spans and merges overlapping or touching ones.
std::vector<HighlightSpan> merge_spans(std::vector<HighlightSpan> spans);

struct ItemAnswer {
  std::string item_id;
  bool attention = false;
  Choice screen_choice = Choice::A;
  Choice choice = Choice::A;  // underlying, after de-randomization
  bool swapped = false;       // true when candidate B was shown in slot A
  std::int64_t elapsed_ms = 0;
  std::vector<HighlightSpan> highlights;
  std::optional<bool> attention_pass;
};

struct ScreeningResult {
  bool valid = false;
  std::vector<std::string> attention_failed;
  bool aid_failed = false;
  std::string aid_answer_echo;
};

struct ManualOverride {
  bool valid = false;
  std::string note;
};

struct Submission {
  std::string submission_id;
  std::string test_id;
  std::string listener_id;
  std::string token;
  std::vector<std::string> order;        // item ids in presentation order
  std::map<std::string, bool> swapped;   // item id -> screen swap
  std::vector<ItemAnswer> answers;       // in submission order
  std::optional<ScreeningResult> screening;
  std::optional<ManualOverride> manual_override;
  std::string completed_at;

  bool finalized() const { return screening.has_value(); }
  /// Screening verdict unless a manual override exists.
  bool valid() const;
  const ItemAnswer* answer_for(const std::string& item_id) const;
};

nlohmann::json to_json(const XabItem& i);
nlohmann::json to_json(const TestDefinition& t);
nlohmann::json to_json(const ItemAnswer& a);
nlohmann::json to_json(const ScreeningResult& s);
nlohmann::json to_json(const Submission& s);

/// Throws Errc::validation for a missing or mistyped field.
TestDefinition test_from_json(const nlohmann::json& j);
ItemAnswer answer_from_json(const nlohmann::json& j);
ScreeningResult screening_from_json(const nlohmann::json& j);

}  // namespace accent_eval::listen
