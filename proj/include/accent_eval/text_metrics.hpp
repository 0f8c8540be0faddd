#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accent_eval::text {

/// Lowercases, replaces Unicode punctuation (categories P*) with spaces
/// except apostrophes and hyphens between two alphanumerics, collapses
/// whitespace and trims. Idempotent.
std::string normalize_text(std::string_view s);

/// Unit-cost Levenshtein distance between two token sequences.
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min(sub, std::min(prev[j], cur[j - 1]) + 1);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct TranscriptPair {
  std::string reference;
  std::string hypothesis;
};

std::vector<std::string> words(std::string_view normalized);
std::u32string code_points(std::string_view utf8);

/// Word error rate after normalization. Throws Errc::undefined_metric when
/// the normalized reference is empty.
double wer(const TranscriptPair& t, bool normalize = true);

/// Character error rate over normalized strings, spaces included.
double cer(const TranscriptPair& t, bool normalize = true);

struct EmbeddingVector {
  std::vector<double> values;
  std::string source_tag;
};

/// Throws Errc::validation for a non-finite or zero vector.
void validate(const EmbeddingVector& v);

/// Throws Errc::incompatible_inputs on dimension or source_tag mismatch.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

struct EmbeddingRecord {
  std::string utterance_id;
  EmbeddingVector embedding;
};

/// JSON object {source_tag, utterance_id, values} or an array of them.
std::vector<EmbeddingRecord> load_embeddings(std::istream& in);
std::vector<EmbeddingRecord> load_embeddings_file(const std::string& path);

struct TranscriptRecord {
  std::string utterance_id;
  TranscriptPair pair;
};

/// JSON lines, one {utterance_id, reference, hypothesis} per line.
std::vector<TranscriptRecord> load_transcripts(std::istream& in);
std::vector<TranscriptRecord> load_transcripts_file(const std::string& path);

}  // namespace accent_eval::text
