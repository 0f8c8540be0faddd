#include "accent_eval/textgrid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "accent_eval/error.hpp"

namespace accent_eval::align {

namespace {

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

std::string decode_utf16(std::string_view raw, bool little_endian) {
  std::string out;
  out.reserve(raw.size() / 2);
  auto unit = [&](std::size_t i) -> char32_t {
    auto lo = static_cast<unsigned char>(raw[i]);
    auto hi = static_cast<unsigned char>(raw[i + 1]);
    return little_endian ? static_cast<char32_t>(lo | (hi << 8)) : static_cast<char32_t>(hi | (lo << 8));
  };
  for (std::size_t i = 2; i + 1 < raw.size(); i += 2) {
    char32_t u = unit(i);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < raw.size()) {
      char32_t low = unit(i + 2);
      if (low >= 0xDC00 && low <= 0xDFFF) {
        append_utf8(out, 0x10000 + ((u - 0xD800) << 10) + (low - 0xDC00));
        i += 2;
        continue;
      }
    }
    append_utf8(out, u);
  }
  return out;
}

std::string to_utf8(std::string_view raw) {
  if (raw.size() >= 2) {
    auto b0 = static_cast<unsigned char>(raw[0]);
    auto b1 = static_cast<unsigned char>(raw[1]);
    if (b0 == 0xFF && b1 == 0xFE) return decode_utf16(raw, true);
    if (b0 == 0xFE && b1 == 0xFF) return decode_utf16(raw, false);
  }
  if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") return std::string(raw.substr(3));
  return std::string(raw);
}

enum class TokenKind { number, text, flag };

struct Token {
  TokenKind kind;
  std::string value;
  std::size_t line;
};

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Both TextGrid layouts reduce to the same stream of values: the long
// format labels each value ("xmin = 0"), the short format lists them bare.
class Tokenizer {
 public:
  explicit Tokenizer(const std::string& text) : in_(text) {}

  std::vector<Token> run() {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_no_;
      if (open_string_) {
        continue_string(raw);
        continue;
      }
      std::string_view line = trim(raw);
      if (line.empty() || line.front() == '!') continue;
      value_or_label(line);
    }
    if (open_string_) throw ParseError("unterminated string", string_line_);
    return std::move(tokens_);
  }

 private:
  void value_or_label(std::string_view line) {
    char c = line.front();
    if (c == '"') return begin_string(line.substr(1));
    if (c == '<') return flag(line);
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') return number(line);

    auto eq = line.find('=');
    if (eq != std::string_view::npos) {
      std::string_view value = trim(line.substr(eq + 1));
      if (value.empty()) throw ParseError("missing value after '='", line_no_);
      if (value.front() == '"') return begin_string(value.substr(1));
      if (value.front() == '<') return flag(value);
      return number(value);
    }
    auto lt = line.find('<');
    if (lt != std::string_view::npos) return flag(line.substr(lt));
    if (line.back() == ':') return;  // "item [1]:", "intervals [3]:"
    throw ParseError("unexpected content '" + std::string(line) + "'", line_no_);
  }

  void number(std::string_view s) {
    auto end = s.find_first_of(" \t!");
    std::string_view word = s.substr(0, end);
    double v = 0.0;
    auto* first = word.data();
    if (!word.empty() && word.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, word.data() + word.size(), v);
    if (ec != std::errc() || ptr != word.data() + word.size()) {
      throw ParseError("malformed number '" + std::string(word) + "'", line_no_);
    }
    tokens_.push_back({TokenKind::number, std::string(word), line_no_});
  }

  void flag(std::string_view s) {
    auto close = s.find('>');
    if (close == std::string_view::npos) throw ParseError("malformed flag", line_no_);
    tokens_.push_back({TokenKind::flag, std::string(s.substr(0, close + 1)), line_no_});
  }

  void begin_string(std::string_view rest) {
    open_string_ = true;
    string_line_ = line_no_;
    current_.clear();
    scan_string(rest);
  }

  void continue_string(std::string_view raw) {
    current_.push_back('\n');
    scan_string(raw);
  }

  void scan_string(std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '"') {
        current_.push_back(s[i]);
        continue;
      }
      if (i + 1 < s.size() && s[i + 1] == '"') {
        current_.push_back('"');
        ++i;
        continue;
      }
      open_string_ = false;
      tokens_.push_back({TokenKind::text, current_, string_line_});
      return;
    }
  }

  std::istringstream in_;
  std::vector<Token> tokens_;
  std::size_t line_no_ = 0;
  bool open_string_ = false;
  std::size_t string_line_ = 0;
  std::string current_;
};

class Cursor {
 public:
  explicit Cursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& next(TokenKind kind, const char* what) {
    if (pos_ >= tokens_.size()) {
      std::size_t line = tokens_.empty() ? 0 : tokens_.back().line;
      throw ParseError(std::string("unexpected end of file, expected ") + what, line);
    }
    const Token& t = tokens_[pos_++];
    if (t.kind != kind) throw ParseError(std::string("expected ") + what + ", found '" + t.value + "'", t.line);
    return t;
  }

  double number(const char* what) {
    const Token& t = next(TokenKind::number, what);
    const char* first = t.value.data();
    if (!t.value.empty() && t.value.front() == '+') ++first;
    double v = 0.0;
    std::from_chars(first, t.value.data() + t.value.size(), v);
    last_line_ = t.line;
    return v;
  }

  std::size_t count(const char* what) {
    double v = number(what);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw ParseError(std::string("invalid ") + what, last_line_);
    }
    return static_cast<std::size_t>(v);
  }

  std::string text(const char* what) {
    const Token& t = next(TokenKind::text, what);
    last_line_ = t.line;
    return t.value;
  }

  std::string flag(const char* what) { return next(TokenKind::flag, what).value; }

  std::size_t last_line() const { return last_line_; }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t last_line_ = 0;
};

constexpr double kTimeTolerance = 1e-9;

AlignmentTier read_interval_tier(Cursor& cur, std::string name, double tier_xmin, double tier_xmax) {
  AlignmentTier tier;
  tier.name = std::move(name);
  std::size_t n = cur.count("interval count");
  double cursor_time = tier_xmin;
  for (std::size_t i = 0; i < n; ++i) {
    double xmin = cur.number("interval xmin");
    std::size_t line = cur.last_line();
    double xmax = cur.number("interval xmax");
    std::string label = cur.text("interval text");
    if (!(xmin < xmax)) {
      throw ParseError("interval " + std::to_string(i + 1) + " of tier '" + tier.name +
                           "' has xmin >= xmax",
                       line);
    }
    if (xmin < cursor_time - kTimeTolerance) {
      throw ParseError("interval " + std::to_string(i + 1) + " of tier '" + tier.name +
                           "' overlaps its predecessor",
                       line);
    }
    if (xmin > cursor_time + kTimeTolerance) {
      tier.intervals.push_back({"", cursor_time, xmin});
    }
    tier.intervals.push_back({std::move(label), xmin, xmax});
    cursor_time = xmax;
  }
  if (n > 0 && tier_xmax > cursor_time + kTimeTolerance) tier.intervals.push_back({"", cursor_time, tier_xmax});
  return tier;
}

void skip_point_tier(Cursor& cur) {
  std::size_t n = cur.count("point count");
  for (std::size_t i = 0; i < n; ++i) {
    cur.number("point time");
    cur.text("point mark");
  }
}

}  // namespace

std::vector<AlignmentTier> parse_textgrid(std::string_view raw) {
  Cursor cur(Tokenizer(to_utf8(raw)).run());

  if (cur.text("file type") != "ooTextFile") throw ParseError("not a Praat text file", cur.last_line());
  if (cur.text("object class") != "TextGrid") throw ParseError("object class is not TextGrid", cur.last_line());
  cur.number("xmin");
  cur.number("xmax");
  std::vector<AlignmentTier> tiers;
  if (cur.flag("tiers flag") == "<exists>") {
    std::size_t n = cur.count("tier count");
    for (std::size_t t = 0; t < n; ++t) {
      std::string cls = cur.text("tier class");
      std::size_t cls_line = cur.last_line();
      std::string name = cur.text("tier name");
      double xmin = cur.number("tier xmin");
      double xmax = cur.number("tier xmax");
      if (cls == "IntervalTier") {
        tiers.push_back(read_interval_tier(cur, std::move(name), xmin, xmax));
      } else if (cls == "TextTier") {
        skip_point_tier(cur);
      } else {
        throw ParseError("unknown tier class '" + cls + "'", cls_line);
      }
    }
  }
  if (tiers.empty()) throw Error(Errc::empty_input, "TextGrid contains no interval tiers");
  return tiers;
}

std::vector<AlignmentTier> parse_textgrid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open TextGrid " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_textgrid(raw);
}

const AlignmentTier& find_tier(const std::vector<AlignmentTier>& tiers, std::string_view name) {
  for (const auto& t : tiers) {
    if (t.name == name) return t;
  }
  throw Error(Errc::not_found, "no tier named '" + std::string(name) + "'");
}

const std::set<std::string>& default_vowel_inventory() {
  static const std::set<std::string> inventory{"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                               "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  return inventory;
}

std::string base_phone(std::string_view label) {
  std::string out(label);
  while (!out.empty() && std::isdigit(static_cast<unsigned char>(out.back()))) out.pop_back();
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_silence(std::string_view label) {
  std::string b = base_phone(trim(label));
  return b.empty() || b == "SIL" || b == "SP";
}

std::vector<VowelToken> extract_vowels(const AlignmentTier& tier, const VowelOptions& options) {
  std::vector<VowelToken> out;
  for (const auto& iv : tier.intervals) {
    if (is_silence(iv.label)) continue;
    std::string base = base_phone(trim(iv.label));
    if (!options.inventory.contains(base)) continue;
    if (options.exclude_reduced && base == "AH" && !iv.label.empty() && iv.label.back() == '0') continue;
    out.push_back({base, iv.midpoint(), out.size()});
  }
  return out;
}

std::vector<std::pair<VowelToken, VowelToken>> pair_vowel_tokens(const std::vector<VowelToken>& a,
                                                                  const std::vector<VowelToken>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = d[i - 1][j - 1] + (a[i - 1].base_label == b[j - 1].base_label ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  std::vector<std::pair<VowelToken, VowelToken>> pairs;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 && j > 0) {
    const bool same = a[i - 1].base_label == b[j - 1].base_label;
    if (d[i][j] == d[i - 1][j - 1] + (same ? 0 : 1)) {
      if (same) pairs.emplace_back(a[i - 1], b[j - 1]);
      --i;
      --j;
      continue;
    }
    const bool up = d[i][j] == d[i - 1][j] + 1;
    const bool left = d[i][j] == d[i][j - 1] + 1;
    // On an up/left tie, gap the larger label; the rule reads the same
    // with the arguments swapped.
    if (up && (!left || a[i - 1].base_label > b[j - 1].base_label)) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace accent_eval::align
