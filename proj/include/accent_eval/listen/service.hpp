#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "accent_eval/listen/store.hpp"
#include "accent_eval/listen/types.hpp"
#include "accent_eval/stats.hpp"

namespace accent_eval::listen {

struct SessionInfo {
  std::string token;
  std::string submission_id;
  std::vector<std::string> order;
};

/// What the listener sees for the next pending item. Slot A/B audio ids are
/// already position-randomized; whether the item is an attention check is
/// not revealed.
struct NextItem {
  bool done = false;
  std::size_t position = 0;  // 0-based index in the presentation order
  std::size_t total = 0;
  std::string item_id;
  std::string reference_audio_id;
  std::string slot_a_audio_id;
  std::string slot_b_audio_id;
  std::optional<std::string> transcript;
  bool require_highlight = false;
  std::string instructions;
  std::string aid_prompt;  // set once every item is answered
};

struct ItemSubmission {
  std::string item_id;
  Choice screen_choice = Choice::A;
  std::vector<HighlightSpan> highlights;
  std::int64_t elapsed_ms = 0;
};

struct ListenerShare {
  std::string listener_id;
  std::string submission_id;
  double proportion = 0.0;  // real items where the system of interest was chosen
  bool valid = false;
};

struct Aggregate {
  std::string test_id;
  bool only_valid = false;
  std::vector<ListenerShare> listeners;
  stats::PreferenceSet preference_set;
  std::optional<stats::PreferenceResult> preference;  // empty with no listeners
  std::map<std::string, std::vector<std::size_t>> highlight_histogram;  // item -> per-character count
};

struct Progress {
  std::size_t valid_count = 0;
  std::size_t invalid_count = 0;
  std::size_t open_sessions = 0;
  std::optional<double> rejection_rate;  // invalid / (valid + invalid)
  std::size_t target = 0;
  bool complete = false;
};

/// Listening-test state machine. Every mutation is appended to the store
/// before it is applied, and a service constructed on an existing store
/// replays it. Listeners cannot revise an item once submitted.
class ListenService {
 public:
  using Clock = std::function<std::string()>;

  explicit ListenService(std::optional<std::filesystem::path> store_path = std::nullopt, Clock clock = {});

  /// Throws Errc::validation for an invalid definition and Errc::conflict
  /// for a reused test_id.
  void create_test(const TestDefinition& t);
  TestDefinition test(const std::string& test_id) const;

  /// Throws Errc::not_found for an unknown test and Errc::conflict when the
  /// listener already has a session for it.
  SessionInfo create_session(const std::string& test_id, const std::string& listener_id);

  NextItem next(const std::string& token) const;

  /// Records one answer. Errc::validation for bad spans or a missing
  /// required highlight, Errc::conflict for a second answer to the same
  /// item, Errc::state after finalize.
  ItemAnswer submit_item(const std::string& token, const ItemSubmission& s);

  /// Screens the finished session. Errc::state when items are pending or
  /// the session is already finalized.
  ScreeningResult finalize(const std::string& token, const std::string& aid_answer);

  /// Manual adjudication of a finalized submission.
  void override_screening(const std::string& submission_id, bool valid, const std::string& note);

  Aggregate aggregate(const std::string& test_id, bool only_valid) const;
  Progress progress(const std::string& test_id) const;

  Submission submission(const std::string& submission_id) const;
  std::vector<Submission> submissions(const std::string& test_id) const;

  /// Whether candidate B is shown in slot A for this listener and item.
  static bool screen_swapped(const TestDefinition& t, const std::string& listener_id, const XabItem& item);

  /// Real items in definition order with attention items at evenly spaced
  /// positions.
  static std::vector<std::string> presentation_order(const TestDefinition& t);

 private:
  void apply(const nlohmann::json& event);
  void record(const nlohmann::json& event);
  const Submission& by_token(const std::string& token) const;
  const XabItem* find_item(const TestDefinition& t, const std::string& item_id, bool* attention,
                           Choice* expected) const;

  mutable std::shared_mutex mutex_;
  std::unique_ptr<JsonlStore> store_;
  Clock clock_;
  std::map<std::string, TestDefinition> tests_;
  std::map<std::string, Submission> submissions_;          // submission_id -> record
  std::map<std::string, std::string> token_to_submission_;
  std::map<std::pair<std::string, std::string>, std::string> listener_sessions_;  // (test, listener) -> id
  std::size_t session_counter_ = 0;
};

nlohmann::json to_json(const SessionInfo& s);
nlohmann::json to_json(const NextItem& n);
nlohmann::json to_json(const Aggregate& a);
nlohmann::json to_json(const Progress& p);

}  // namespace accent_eval::listen
