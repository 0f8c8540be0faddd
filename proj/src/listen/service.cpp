#include "accent_eval/listen/service.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <random>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "accent_eval/error.hpp"
#include "accent_eval/text_metrics.hpp"

namespace accent_eval::listen {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string random_token() {
  std::random_device rd;
  std::uint64_t hi = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  std::uint64_t lo = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  return fmt::format("{:016x}{:016x}", hi, lo);
}

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

}  // namespace

ListenService::ListenService(std::optional<std::filesystem::path> store_path, Clock clock)
    : store_(store_path ? std::make_unique<JsonlStore>(*store_path) : std::make_unique<JsonlStore>()),
      clock_(clock ? std::move(clock) : Clock(utc_now)) {
  for (const auto& event : store_->load()) {
    try {
      apply(event);
    } catch (const json::exception& e) {
      throw ParseError(std::string("store replay: ") + e.what());
    }
  }
}

bool ListenService::screen_swapped(const TestDefinition& t, const std::string& listener_id, const XabItem& item) {
  std::uint64_t h = fnv1a(listener_id);
  h = fnv1a(std::string_view("\x1f", 1), h);
  h = fnv1a(item.item_id, h);
  return (splitmix64(splitmix64(t.seed ^ splitmix64(item.ab_assignment_seed)) ^ h) >> 63) != 0;
}

std::vector<std::string> ListenService::presentation_order(const TestDefinition& t) {
  const std::size_t n = t.items.size();
  const std::size_t m = t.attention_items.size();
  std::vector<std::string> order;
  std::size_t next_attention = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (next_attention < m && (next_attention + 1) * n / (m + 1) == i) {
      order.push_back(t.attention_items[next_attention++].item.item_id);
    }
    order.push_back(t.items[i].item_id);
  }
  while (next_attention < m) order.push_back(t.attention_items[next_attention++].item.item_id);
  return order;
}

const XabItem* ListenService::find_item(const TestDefinition& t, const std::string& item_id, bool* attention,
                                        Choice* expected) const {
  for (const auto& i : t.items) {
    if (i.item_id == item_id) {
      if (attention) *attention = false;
      return &i;
    }
  }
  for (const auto& a : t.attention_items) {
    if (a.item.item_id == item_id) {
      if (attention) *attention = true;
      if (expected) *expected = a.expected;
      return &a.item;
    }
  }
  return nullptr;
}

const Submission& ListenService::by_token(const std::string& token) const {
  auto it = token_to_submission_.find(token);
  if (it == token_to_submission_.end()) throw Error(Errc::not_found, "unknown session token");
  return submissions_.at(it->second);
}

void ListenService::record(const json& event) {
  store_->append(event);
  apply(event);
}

void ListenService::apply(const json& event) {
  const std::string type = event.at("type").get<std::string>();
  if (type == "test") {
    TestDefinition t = test_from_json(event.at("test"));
    tests_[t.test_id] = std::move(t);
  } else if (type == "session") {
    Submission s;
    s.submission_id = event.at("submission_id").get<std::string>();
    s.test_id = event.at("test_id").get<std::string>();
    s.listener_id = event.at("listener_id").get<std::string>();
    s.token = event.at("token").get<std::string>();
    s.order = event.at("order").get<std::vector<std::string>>();
    s.swapped = event.at("swapped").get<std::map<std::string, bool>>();
    token_to_submission_[s.token] = s.submission_id;
    listener_sessions_[{s.test_id, s.listener_id}] = s.submission_id;
    ++session_counter_;
    submissions_[s.submission_id] = std::move(s);
  } else if (type == "answer") {
    submissions_.at(event.at("submission_id").get<std::string>()).answers.push_back(answer_from_json(event.at("answer")));
  } else if (type == "finalize") {
    Submission& s = submissions_.at(event.at("submission_id").get<std::string>());
    s.screening = screening_from_json(event.at("screening"));
    s.completed_at = event.at("completed_at").get<std::string>();
  } else if (type == "override") {
    Submission& s = submissions_.at(event.at("submission_id").get<std::string>());
    s.manual_override = ManualOverride{event.at("valid").get<bool>(), event.at("note").get<std::string>()};
  } else {
    throw ParseError("store: unknown event type '" + type + "'");
  }
}

void ListenService::create_test(const TestDefinition& t) {
  validate(t);
  std::unique_lock lock(mutex_);
  if (tests_.count(t.test_id)) throw Error(Errc::conflict, "test '" + t.test_id + "' already exists");
  record({{"type", "test"}, {"test", to_json(t)}});
}

TestDefinition ListenService::test(const std::string& test_id) const {
  std::shared_lock lock(mutex_);
  auto it = tests_.find(test_id);
  if (it == tests_.end()) throw Error(Errc::not_found, "unknown test '" + test_id + "'");
  return it->second;
}

SessionInfo ListenService::create_session(const std::string& test_id, const std::string& listener_id) {
  if (listener_id.empty()) throw Error(Errc::validation, "listener_id must not be empty");
  std::unique_lock lock(mutex_);
  auto it = tests_.find(test_id);
  if (it == tests_.end()) throw Error(Errc::not_found, "unknown test '" + test_id + "'");
  if (listener_sessions_.count({test_id, listener_id})) {
    throw Error(Errc::conflict, "listener '" + listener_id + "' already has a session for test '" + test_id + "'");
  }
  const TestDefinition& t = it->second;
  json swapped = json::object();
  for (const auto& i : t.items) swapped[i.item_id] = screen_swapped(t, listener_id, i);
  for (const auto& a : t.attention_items) swapped[a.item.item_id] = screen_swapped(t, listener_id, a.item);
  SessionInfo info;
  info.token = random_token();
  info.submission_id = fmt::format("sub-{:06d}", session_counter_ + 1);
  info.order = presentation_order(t);
  record({{"type", "session"},
          {"submission_id", info.submission_id},
          {"test_id", test_id},
          {"listener_id", listener_id},
          {"token", info.token},
          {"order", info.order},
          {"swapped", swapped}});
  return info;
}

NextItem ListenService::next(const std::string& token) const {
  std::shared_lock lock(mutex_);
  const Submission& s = by_token(token);
  const TestDefinition& t = tests_.at(s.test_id);
  NextItem n;
  n.total = s.order.size();
  for (std::size_t pos = 0; pos < s.order.size(); ++pos) {
    if (s.answer_for(s.order[pos])) continue;
    const XabItem& item = *find_item(t, s.order[pos], nullptr, nullptr);
    const bool swapped = s.swapped.at(item.item_id);
    n.position = pos;
    n.item_id = item.item_id;
    n.reference_audio_id = item.reference_audio_id;
    n.slot_a_audio_id = swapped ? item.candidate_b_audio_id : item.candidate_a_audio_id;
    n.slot_b_audio_id = swapped ? item.candidate_a_audio_id : item.candidate_b_audio_id;
    if (t.show_transcript) n.transcript = item.transcript;
    n.require_highlight = t.require_highlight;
    n.instructions = t.instructions;
    return n;
  }
  n.done = true;
  n.position = s.order.size();
  n.aid_prompt = t.aid_question.prompt;
  return n;
}

ItemAnswer ListenService::submit_item(const std::string& token, const ItemSubmission& req) {
  std::unique_lock lock(mutex_);
  const Submission& s = by_token(token);
  if (s.finalized()) throw Error(Errc::state, "session is already finalized");
  const TestDefinition& t = tests_.at(s.test_id);
  bool attention = false;
  Choice expected = Choice::A;
  const XabItem* item = find_item(t, req.item_id, &attention, &expected);
  if (!item) throw Error(Errc::not_found, "item '" + req.item_id + "' is not part of this session");
  if (s.answer_for(req.item_id)) {
    throw Error(Errc::conflict, "item '" + req.item_id + "' was already answered; answers cannot be revised");
  }
  if (req.elapsed_ms < 0) throw Error(Errc::validation, "elapsed_ms must not be negative");

  const std::size_t length = text::code_points(item->transcript).size();
  for (const auto& span : req.highlights) {
    if (!(span.char_start < span.char_end) || span.char_end > length) {
      throw Error(Errc::validation, fmt::format("highlight span ({}, {}) is outside the transcript of {} characters",
                                                span.char_start, span.char_end, length));
    }
  }
  ItemAnswer a;
  a.item_id = req.item_id;
  a.attention = attention;
  a.highlights = merge_spans(req.highlights);
  if (t.require_highlight && !attention && a.highlights.empty()) {
    throw Error(Errc::validation, "require_highlight: at least one highlighted span is required on this item");
  }
  a.screen_choice = req.screen_choice;
  a.swapped = s.swapped.at(req.item_id);
  a.choice = a.swapped ? (req.screen_choice == Choice::A ? Choice::B : Choice::A) : req.screen_choice;
  a.elapsed_ms = req.elapsed_ms;
  if (attention) a.attention_pass = a.choice == expected;
  record({{"type", "answer"}, {"submission_id", s.submission_id}, {"answer", to_json(a)}});
  return a;
}

ScreeningResult ListenService::finalize(const std::string& token, const std::string& aid_answer) {
  std::unique_lock lock(mutex_);
  const Submission& s = by_token(token);
  if (s.finalized()) throw Error(Errc::state, "session is already finalized");
  if (s.answers.size() < s.order.size()) {
    throw Error(Errc::state, fmt::format("{} of {} items are still unanswered", s.order.size() - s.answers.size(),
                                         s.order.size()));
  }
  const TestDefinition& t = tests_.at(s.test_id);
  ScreeningResult r;
  for (const auto& a : s.answers) {
    if (a.attention && !a.attention_pass.value_or(false)) r.attention_failed.push_back(a.item_id);
  }
  r.aid_answer_echo = aid_answer;
  if (!t.aid_question.accepted_keywords.empty()) {
    const std::string normalized = text::normalize_text(aid_answer);
    r.aid_failed = std::none_of(t.aid_question.accepted_keywords.begin(), t.aid_question.accepted_keywords.end(),
                                [&](const std::string& k) { return normalized.find(k) != std::string::npos; });
  }
  r.valid = r.attention_failed.empty() && !r.aid_failed;
  record({{"type", "finalize"}, {"submission_id", s.submission_id}, {"screening", to_json(r)}, {"completed_at", clock_()}});
  return r;
}

void ListenService::override_screening(const std::string& submission_id, bool valid, const std::string& note) {
  std::unique_lock lock(mutex_);
  auto it = submissions_.find(submission_id);
  if (it == submissions_.end()) throw Error(Errc::not_found, "unknown submission '" + submission_id + "'");
  if (!it->second.finalized()) throw Error(Errc::state, "only finalized submissions can be adjudicated");
  record({{"type", "override"}, {"submission_id", submission_id}, {"valid", valid}, {"note", note}});
}

Aggregate ListenService::aggregate(const std::string& test_id, bool only_valid) const {
  std::shared_lock lock(mutex_);
  auto it = tests_.find(test_id);
  if (it == tests_.end()) throw Error(Errc::not_found, "unknown test '" + test_id + "'");
  const TestDefinition& t = it->second;
  Aggregate agg;
  agg.test_id = test_id;
  agg.only_valid = only_valid;
  for (const auto& item : t.items) {
    agg.highlight_histogram[item.item_id].assign(text::code_points(item.transcript).size(), 0);
  }
  for (const auto& [id, s] : submissions_) {
    if (s.test_id != test_id || !s.finalized()) continue;
    if (only_valid && !s.valid()) continue;
    std::size_t chosen = 0;
    std::size_t real = 0;
    for (const auto& a : s.answers) {
      if (a.attention) continue;
      ++real;
      if (a.choice == t.system_of_interest) ++chosen;
      auto& counts = agg.highlight_histogram[a.item_id];
      for (const auto& span : a.highlights) {
        for (std::size_t c = span.char_start; c < span.char_end && c < counts.size(); ++c) ++counts[c];
      }
    }
    const double share = real ? static_cast<double>(chosen) / static_cast<double>(real) : 0.0;
    agg.listeners.push_back({s.listener_id, s.submission_id, share, s.valid()});
    agg.preference_set.proportions.push_back(share);
  }
  if (!agg.preference_set.proportions.empty()) agg.preference = stats::preference_test(agg.preference_set);
  return agg;
}

Progress ListenService::progress(const std::string& test_id) const {
  std::shared_lock lock(mutex_);
  auto it = tests_.find(test_id);
  if (it == tests_.end()) throw Error(Errc::not_found, "unknown test '" + test_id + "'");
  Progress p;
  p.target = it->second.target_valid_submissions;
  for (const auto& [id, s] : submissions_) {
    if (s.test_id != test_id) continue;
    if (!s.finalized()) {
      ++p.open_sessions;
    } else if (s.valid()) {
      ++p.valid_count;
    } else {
      ++p.invalid_count;
    }
  }
  const std::size_t done = p.valid_count + p.invalid_count;
  if (done > 0) p.rejection_rate = static_cast<double>(p.invalid_count) / static_cast<double>(done);
  p.complete = p.valid_count >= p.target;
  return p;
}

Submission ListenService::submission(const std::string& submission_id) const {
  std::shared_lock lock(mutex_);
  auto it = submissions_.find(submission_id);
  if (it == submissions_.end()) throw Error(Errc::not_found, "unknown submission '" + submission_id + "'");
  return it->second;
}

std::vector<Submission> ListenService::submissions(const std::string& test_id) const {
  std::shared_lock lock(mutex_);
  if (!tests_.count(test_id)) throw Error(Errc::not_found, "unknown test '" + test_id + "'");
  std::vector<Submission> out;
  for (const auto& [id, s] : submissions_) {
    if (s.test_id == test_id) out.push_back(s);
  }
  return out;
}

json to_json(const SessionInfo& s) {
  return {{"token", s.token}, {"submission_id", s.submission_id}, {"order", s.order}};
}

json to_json(const NextItem& n) {
  if (n.done) return {{"done", true}, {"total", n.total}, {"aid_prompt", n.aid_prompt}};
  json j = {{"done", false},
            {"position", n.position},
            {"total", n.total},
            {"item_id", n.item_id},
            {"reference_audio_id", n.reference_audio_id},
            {"slot_a_audio_id", n.slot_a_audio_id},
            {"slot_b_audio_id", n.slot_b_audio_id},
            {"require_highlight", n.require_highlight},
            {"instructions", n.instructions}};
  j["transcript"] = n.transcript ? json(*n.transcript) : json(nullptr);
  return j;
}

json to_json(const Aggregate& a) {
  json listeners = json::array();
  for (const auto& l : a.listeners) {
    listeners.push_back({{"listener_id", l.listener_id},
                         {"submission_id", l.submission_id},
                         {"proportion", l.proportion},
                         {"valid", l.valid}});
  }
  json pref = nullptr;
  if (a.preference) {
    const auto& p = *a.preference;
    pref = {{"n", p.n},
            {"mean_pct", p.mean_pct},
            {"ci95_halfwidth_pct", p.ci95_halfwidth_pct ? json(*p.ci95_halfwidth_pct) : json(nullptr)},
            {"p_one_sided", p.p_one_sided ? json(*p.p_one_sided) : json(nullptr)}};
  }
  return {{"test_id", a.test_id},
          {"only_valid", a.only_valid},
          {"listeners", listeners},
          {"proportions", a.preference_set.proportions},
          {"preference", pref},
          {"highlight_histogram", a.highlight_histogram}};
}

json to_json(const Progress& p) {
  return {{"valid_count", p.valid_count},
          {"invalid_count", p.invalid_count},
          {"open_sessions", p.open_sessions},
          {"rejection_rate", p.rejection_rate ? json(*p.rejection_rate) : json(nullptr)},
          {"target", p.target},
          {"complete", p.complete}};
}

}  // namespace accent_eval::listen
