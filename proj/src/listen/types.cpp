#include "accent_eval/listen/types.hpp"

#include <algorithm>
#include <cctype>

#include "accent_eval/error.hpp"

namespace accent_eval::listen {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::validation, what); }

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(where + ": '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, where);
}

XabItem item_from_json(const json& j, const std::string& where) {
  XabItem i;
  i.item_id = field<std::string>(j, "item_id", where);
  const std::string named = where + " '" + i.item_id + "'";
  i.reference_audio_id = field<std::string>(j, "reference_audio_id", named);
  i.candidate_a_audio_id = field<std::string>(j, "candidate_a_audio_id", named);
  i.candidate_b_audio_id = field<std::string>(j, "candidate_b_audio_id", named);
  i.transcript = field_or<std::string>(j, "transcript", "", named);
  i.ab_assignment_seed = field_or<std::uint64_t>(j, "ab_assignment_seed", 0, named);
  return i;
}

}  // namespace

Choice parse_choice(const std::string& s) {
  if (s == "A" || s == "a") return Choice::A;
  if (s == "B" || s == "b") return Choice::B;
  invalid("choice must be \"A\" or \"B\", got \"" + s + "\"");
}

const char* to_string(Choice c) { return c == Choice::A ? "A" : "B"; }

void validate(const TestDefinition& t) {
  if (t.test_id.empty()) invalid("test_id must not be empty");
  if (t.items.empty()) invalid("a test needs at least one item");
  std::set<std::string> ids;
  auto check_item = [&](const XabItem& i) {
    if (i.item_id.empty()) invalid("item_id must not be empty");
    if (!ids.insert(i.item_id).second) invalid("duplicate item_id '" + i.item_id + "'");
    if (i.reference_audio_id == i.candidate_a_audio_id || i.reference_audio_id == i.candidate_b_audio_id ||
        i.candidate_a_audio_id == i.candidate_b_audio_id) {
      invalid("item '" + i.item_id + "' must reference three distinct audio ids");
    }
    if (i.reference_audio_id.empty() || i.candidate_a_audio_id.empty() || i.candidate_b_audio_id.empty()) {
      invalid("item '" + i.item_id + "' has an empty audio id");
    }
    if (t.show_transcript && i.transcript.empty()) {
      invalid("item '" + i.item_id + "' needs a transcript because show_transcript is set");
    }
  };
  for (const auto& i : t.items) check_item(i);
  for (const auto& a : t.attention_items) check_item(a.item);
  for (const auto& k : t.aid_question.accepted_keywords) {
    if (k.empty()) invalid("accepted_keywords must not contain an empty string");
    if (std::any_of(k.begin(), k.end(), [](unsigned char c) { return std::isupper(c); })) {
      invalid("accepted keyword '" + k + "' must be lowercase");
    }
  }
  if (t.target_valid_submissions == 0) invalid("target_valid_submissions must be positive");
}

std::vector<HighlightSpan> merge_spans(std::vector<HighlightSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const HighlightSpan& a, const HighlightSpan& b) {
    return a.char_start != b.char_start ? a.char_start < b.char_start : a.char_end < b.char_end;
  });
  std::vector<HighlightSpan> out;
  for (const auto& s : spans) {
    if (!out.empty() && s.char_start <= out.back().char_end) {
      out.back().char_end = std::max(out.back().char_end, s.char_end);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

bool Submission::valid() const {
  if (manual_override) return manual_override->valid;
  return screening && screening->valid;
}

const ItemAnswer* Submission::answer_for(const std::string& item_id) const {
  for (const auto& a : answers) {
    if (a.item_id == item_id) return &a;
  }
  return nullptr;
}

json to_json(const XabItem& i) {
  return {{"item_id", i.item_id},
          {"reference_audio_id", i.reference_audio_id},
          {"candidate_a_audio_id", i.candidate_a_audio_id},
          {"candidate_b_audio_id", i.candidate_b_audio_id},
          {"transcript", i.transcript},
          {"ab_assignment_seed", i.ab_assignment_seed}};
}

json to_json(const TestDefinition& t) {
  json items = json::array();
  for (const auto& i : t.items) items.push_back(to_json(i));
  json attention = json::array();
  for (const auto& a : t.attention_items) {
    json j = to_json(a.item);
    j["expected"] = to_string(a.expected);
    attention.push_back(std::move(j));
  }
  return {{"test_id", t.test_id},
          {"show_transcript", t.show_transcript},
          {"require_highlight", t.require_highlight},
          {"instructions", t.instructions},
          {"seed", t.seed},
          {"system_of_interest", to_string(t.system_of_interest)},
          {"items", items},
          {"attention_items", attention},
          {"aid_question", {{"prompt", t.aid_question.prompt}, {"accepted_keywords", t.aid_question.accepted_keywords}}},
          {"target_valid_submissions", t.target_valid_submissions},
          {"metadata", t.metadata}};
}

TestDefinition test_from_json(const json& j) {
  if (!j.is_object()) invalid("test definition must be a JSON object");
  TestDefinition t;
  t.test_id = field<std::string>(j, "test_id", "test");
  t.show_transcript = field_or<bool>(j, "show_transcript", false, "test");
  t.require_highlight = field_or<bool>(j, "require_highlight", false, "test");
  t.instructions = field_or<std::string>(j, "instructions", "", "test");
  t.seed = field_or<std::uint64_t>(j, "seed", 0, "test");
  t.system_of_interest = parse_choice(field_or<std::string>(j, "system_of_interest", "A", "test"));
  const json items = field_or<json>(j, "items", json::array(), "test");
  if (!items.is_array()) invalid("test: 'items' must be an array");
  for (const auto& i : items) t.items.push_back(item_from_json(i, "item"));
  const json attention = field_or<json>(j, "attention_items", json::array(), "test");
  if (!attention.is_array()) invalid("test: 'attention_items' must be an array");
  for (const auto& a : attention) {
    AttentionItem ai;
    ai.item = item_from_json(a, "attention item");
    ai.expected = parse_choice(field<std::string>(a, "expected", "attention item '" + ai.item.item_id + "'"));
    t.attention_items.push_back(std::move(ai));
  }
  if (j.contains("aid_question")) {
    const json& q = j.at("aid_question");
    t.aid_question.prompt = field_or<std::string>(q, "prompt", "", "aid_question");
    t.aid_question.accepted_keywords =
        field_or<std::set<std::string>>(q, "accepted_keywords", {}, "aid_question");
  }
  t.target_valid_submissions = field_or<std::size_t>(j, "target_valid_submissions", 15, "test");
  t.metadata = field_or<std::map<std::string, std::string>>(j, "metadata", {}, "test");
  validate(t);
  return t;
}

json to_json(const ItemAnswer& a) {
  json spans = json::array();
  for (const auto& s : a.highlights) spans.push_back({{"char_start", s.char_start}, {"char_end", s.char_end}});
  json j = {{"item_id", a.item_id},
            {"attention", a.attention},
            {"screen_choice", to_string(a.screen_choice)},
            {"choice", to_string(a.choice)},
            {"swapped", a.swapped},
            {"elapsed_ms", a.elapsed_ms},
            {"highlights", spans}};
  j["attention_pass"] = a.attention_pass ? json(*a.attention_pass) : json(nullptr);
  return j;
}

ItemAnswer answer_from_json(const json& j) {
  ItemAnswer a;
  a.item_id = field<std::string>(j, "item_id", "answer");
  a.attention = field<bool>(j, "attention", "answer");
  a.screen_choice = parse_choice(field<std::string>(j, "screen_choice", "answer"));
  a.choice = parse_choice(field<std::string>(j, "choice", "answer"));
  a.swapped = field<bool>(j, "swapped", "answer");
  a.elapsed_ms = field<std::int64_t>(j, "elapsed_ms", "answer");
  for (const auto& s : field<json>(j, "highlights", "answer")) {
    a.highlights.push_back({field<std::size_t>(s, "char_start", "span"), field<std::size_t>(s, "char_end", "span")});
  }
  if (j.contains("attention_pass") && !j.at("attention_pass").is_null()) {
    a.attention_pass = field<bool>(j, "attention_pass", "answer");
  }
  return a;
}

json to_json(const ScreeningResult& s) {
  return {{"valid", s.valid},
          {"attention_failed", s.attention_failed},
          {"aid_failed", s.aid_failed},
          {"aid_answer_echo", s.aid_answer_echo}};
}

ScreeningResult screening_from_json(const json& j) {
  ScreeningResult s;
  s.valid = field<bool>(j, "valid", "screening");
  s.attention_failed = field<std::vector<std::string>>(j, "attention_failed", "screening");
  s.aid_failed = field<bool>(j, "aid_failed", "screening");
  s.aid_answer_echo = field<std::string>(j, "aid_answer_echo", "screening");
  return s;
}

json to_json(const Submission& s) {
  json answers = json::array();
  for (const auto& a : s.answers) answers.push_back(to_json(a));
  json j = {{"submission_id", s.submission_id},
            {"test_id", s.test_id},
            {"listener_id", s.listener_id},
            {"order", s.order},
            {"answers", answers},
            {"finalized", s.finalized()},
            {"valid", s.valid()},
            {"completed_at", s.completed_at}};
  j["screening"] = s.screening ? to_json(*s.screening) : json(nullptr);
  j["manual_override"] = s.manual_override
                             ? json{{"valid", s.manual_override->valid}, {"note", s.manual_override->note}}
                             : json(nullptr);
  return j;
}

}  // namespace accent_eval::listen
