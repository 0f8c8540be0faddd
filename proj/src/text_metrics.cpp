#include "accent_eval/text_metrics.hpp"

#include <cmath>
#include <cwctype>
#include <fstream>
#include <locale>
#include <utility>

#include <json.hpp>

#include "accent_eval/error.hpp"

namespace accent_eval::text {

namespace {

#include "unicode_punctuation.inc"

bool is_punctuation(char32_t c) {
  std::size_t lo = 0;
  std::size_t hi = std::size(kPunctuationRanges);
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (c < kPunctuationRanges[mid].first) {
      hi = mid;
    } else if (c > kPunctuationRanges[mid].second) {
      lo = mid + 1;
    } else {
      return true;
    }
  }
  return false;
}

bool is_joiner(char32_t c) {
  return c == U'\'' || c == U'’' || c == U'-' || c == U'‐' || c == U'‑';
}

// Case mapping and classification come from the C.UTF-8 locale when the
// system provides it; otherwise only ASCII is handled.
class CharClass {
 public:
  CharClass() {
    try {
      locale_ = std::locale("C.UTF-8");
    } catch (const std::runtime_error&) {
      locale_ = std::locale::classic();
    }
    ctype_ = &std::use_facet<std::ctype<wchar_t>>(locale_);
  }

  char32_t lower(char32_t c) const { return static_cast<char32_t>(ctype_->tolower(static_cast<wchar_t>(c))); }
  bool alnum(char32_t c) const { return ctype_->is(std::ctype_base::alnum, static_cast<wchar_t>(c)); }
  bool space(char32_t c) const {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           ctype_->is(std::ctype_base::space, static_cast<wchar_t>(c));
  }

 private:
  std::locale locale_;
  const std::ctype<wchar_t>* ctype_ = nullptr;
};

const CharClass& char_class() {
  static const CharClass cc;
  return cc;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::u32string code_points(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string normalize_text(std::string_view s) {
  const CharClass& cc = char_class();
  std::u32string cps = code_points(s);
  for (char32_t& c : cps) c = cc.lower(c);

  std::u32string cleaned;
  cleaned.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (is_punctuation(c)) {
      const bool inside_word = is_joiner(c) && i > 0 && i + 1 < cps.size() && cc.alnum(cps[i - 1]) &&
                               cc.alnum(cps[i + 1]);
      cleaned.push_back(inside_word ? c : U' ');
    } else {
      cleaned.push_back(cc.space(c) ? U' ' : c);
    }
  }

  std::string out;
  bool pending_space = false;
  for (char32_t c : cleaned) {
    if (c == U' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, c);
  }
  return out;
}

std::vector<std::string> words(std::string_view normalized) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : normalized) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double wer(const TranscriptPair& t, bool normalize) {
  const auto ref = words(normalize ? normalize_text(t.reference) : t.reference);
  const auto hyp = words(normalize ? normalize_text(t.hypothesis) : t.hypothesis);
  if (ref.empty()) throw Error(Errc::undefined_metric, "wer: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

double cer(const TranscriptPair& t, bool normalize) {
  const std::u32string ref = code_points(normalize ? normalize_text(t.reference) : t.reference);
  const std::u32string hyp = code_points(normalize ? normalize_text(t.hypothesis) : t.hypothesis);
  if (ref.empty()) throw Error(Errc::undefined_metric, "cer: empty reference");
  const std::vector<char32_t> a(ref.begin(), ref.end());
  const std::vector<char32_t> b(hyp.begin(), hyp.end());
  return static_cast<double>(edit_distance(a, b)) / static_cast<double>(a.size());
}

void validate(const EmbeddingVector& v) {
  double norm = 0.0;
  for (double x : v.values) {
    if (!std::isfinite(x)) throw Error(Errc::validation, "embedding '" + v.source_tag + "' has a non-finite value");
    norm += x * x;
  }
  if (!(norm > 0.0)) throw Error(Errc::validation, "embedding '" + v.source_tag + "' has zero norm");
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.source_tag != v.source_tag) {
    throw Error(Errc::incompatible_inputs,
                "cosine_similarity: embeddings from different models ('" + u.source_tag + "' vs '" + v.source_tag + "')");
  }
  if (u.values.size() != v.values.size()) {
    throw Error(Errc::incompatible_inputs, "cosine_similarity: dimension mismatch (" +
                                               std::to_string(u.values.size()) + " vs " +
                                               std::to_string(v.values.size()) + ")");
  }
  validate(u);
  validate(v);
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    dot += u.values[k] * v.values[k];
    nu += u.values[k] * u.values[k];
    nv += v.values[k] * v.values[k];
  }
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

namespace {

EmbeddingRecord embedding_from_json(const nlohmann::json& j) {
  EmbeddingRecord r;
  r.utterance_id = j.value("utterance_id", "");
  r.embedding.source_tag = j.at("source_tag").get<std::string>();
  r.embedding.values = j.at("values").get<std::vector<double>>();
  validate(r.embedding);
  return r;
}

}  // namespace

std::vector<EmbeddingRecord> load_embeddings(std::istream& in) {
  std::vector<EmbeddingRecord> out;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.is_array()) {
      for (const auto& e : j) out.push_back(embedding_from_json(e));
    } else {
      out.push_back(embedding_from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding file: ") + e.what());
  }
  return out;
}

std::vector<EmbeddingRecord> load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::not_found, "cannot open embedding file " + path);
  return load_embeddings(in);
}

std::vector<TranscriptRecord> load_transcripts(std::istream& in) {
  std::vector<TranscriptRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("utterance_id").get<std::string>(),
                     {j.at("reference").get<std::string>(), j.at("hypothesis").get<std::string>()}});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("transcripts: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<TranscriptRecord> load_transcripts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::not_found, "cannot open transcripts file " + path);
  return load_transcripts(in);
}

}  // namespace accent_eval::text
