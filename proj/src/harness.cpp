#include "accent_eval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "accent_eval/audio.hpp"
#include "accent_eval/error.hpp"
#include "accent_eval/formant.hpp"
#include "accent_eval/pitch.hpp"
#include "accent_eval/ppg.hpp"
#include "accent_eval/spectral.hpp"
#include "accent_eval/text_metrics.hpp"
#include "accent_eval/textgrid.hpp"

namespace accent_eval::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCosSimPrefix = "cossim:";

const std::vector<std::string>& fixed_metrics_before_embeddings() {
  static const std::vector<std::string> v{"vf_rmse", "ppg_cossim", "ppg_js"};
  return v;
}

const std::vector<std::string>& fixed_metrics_after_embeddings() {
  static const std::vector<std::string> v{"wer", "cer", "mcd", "f0_rmse", "f0_per_rmse", "f0_pcc"};
  return v;
}

bool is_embedding_metric(const std::string& m) { return m.rfind(kCosSimPrefix, 0) == 0; }
bool is_f0_metric(const std::string& m) { return m == "f0_rmse" || m == "f0_per_rmse" || m == "f0_pcc"; }

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- manifest

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::config, "manifest: " + what); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) config_error("unknown field '" + key + "' in " + where);
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_error(where + " lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("'" + key + "' in " + where + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

UtteranceEntry parse_entry(const json& j, const fs::path& base, const std::string& where) {
  check_keys(j, {"audio", "alignment", "ppg", "embeddings"}, where);
  UtteranceEntry e;
  if (j.contains("audio")) e.audio = resolve(base, get_field<std::string>(j, "audio", where));
  if (j.contains("alignment")) e.alignment = resolve(base, get_field<std::string>(j, "alignment", where));
  if (j.contains("ppg")) e.ppg = resolve(base, get_field<std::string>(j, "ppg", where));
  if (j.contains("embeddings")) {
    const json& emb = j.at("embeddings");
    if (!emb.is_object()) config_error("'embeddings' in " + where + " must map source tags to files");
    for (const auto& [tag, path] : emb.items()) {
      if (!path.is_string()) config_error("embedding '" + tag + "' in " + where + " must be a path");
      e.embeddings[tag] = resolve(base, path.get<std::string>());
    }
  }
  return e;
}

SystemEntry parse_system(const json& j, const fs::path& base, bool ground_truth) {
  const std::string where = ground_truth ? std::string("ground_truth") : "system";
  std::set<std::string> keys{"name", "speaker", "formant_ceiling", "transcripts", "entries"};
  if (!ground_truth) keys.insert("hypothesized_rank");
  check_keys(j, keys, where);
  SystemEntry s;
  s.name = ground_truth ? j.value("name", std::string("ground_truth")) : get_field<std::string>(j, "name", where);
  const std::string named = where + " '" + s.name + "'";
  if (!ground_truth) s.hypothesized_rank = get_field<int>(j, "hypothesized_rank", named);
  if (j.contains("speaker")) s.speaker = get_field<std::string>(j, "speaker", named);
  if (j.contains("formant_ceiling")) s.formant_ceiling = get_field<double>(j, "formant_ceiling", named);
  if (j.contains("transcripts")) s.transcripts = resolve(base, get_field<std::string>(j, "transcripts", named));
  if (j.contains("entries")) {
    const json& entries = j.at("entries");
    if (!entries.is_object()) config_error("'entries' in " + named + " must be an object");
    for (const auto& [utt, e] : entries.items()) {
      s.entries[utt] = parse_entry(e, base, named + " utterance '" + utt + "'");
    }
  }
  return s;
}

// ---------------------------------------------------------------- features

struct Features {
  std::optional<audio::Waveform> audio;
  std::optional<formant::MeasureResult> formants;
  std::optional<spectral::CepstrumTrack> cepstrum;
  std::optional<pitch::F0Track> f0;
  std::optional<ppg::Posteriorgram> ppg;
  std::map<std::string, text::EmbeddingVector> embeddings;
  std::map<std::string, std::string> errors;  // feature name -> reason
};

struct Needs {
  bool formants = false;
  bool cepstrum = false;
  bool f0 = false;
  bool ppg = false;
  std::set<std::string> embedding_tags;
};

Needs needs_for(const std::vector<std::string>& metrics) {
  Needs n;
  for (const auto& m : metrics) {
    if (m == "vf_rmse") n.formants = true;
    if (m == "ppg_cossim" || m == "ppg_js") n.ppg = true;
    if (m == "mcd") n.cepstrum = true;
    if (is_f0_metric(m)) n.cepstrum = n.f0 = true;
    if (is_embedding_metric(m)) n.embedding_tags.insert(m.substr(std::char_traits<char>::length(kCosSimPrefix)));
  }
  return n;
}

template <typename Fn>
void guarded(Features& f, const std::string& feature, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    f.errors[feature] = e.what();
  }
}

Features compute_features(const EvalManifest& m, const SystemEntry& sys, const UtteranceEntry& entry,
                          const Needs& needs) {
  Features f;
  if (needs.formants || needs.cepstrum || needs.f0) {
    guarded(f, "audio", [&] { f.audio = audio::load_wav_file(*entry.audio); });
  }
  if (needs.formants) {
    if (f.audio) {
      guarded(f, "formants", [&] {
        const auto tiers = align::parse_textgrid_file(entry.alignment->string());
        align::VowelOptions opts;
        opts.exclude_reduced = m.exclude_reduced_vowels;
        const auto tokens = align::extract_vowels(align::find_tier(tiers, m.tier), opts);
        f.formants = formant::measure_tokens(*f.audio, tokens, sys.formant_ceiling);
      });
    } else {
      f.errors["formants"] = f.errors["audio"];
    }
  }
  if (needs.cepstrum) {
    if (f.audio) {
      guarded(f, "cepstrum", [&] { f.cepstrum = spectral::mel_cepstrum(*f.audio); });
    } else {
      f.errors["cepstrum"] = f.errors["audio"];
    }
  }
  if (needs.f0) {
    if (f.audio) {
      guarded(f, "f0", [&] { f.f0 = pitch::estimate_f0(*f.audio); });
    } else {
      f.errors["f0"] = f.errors["audio"];
    }
  }
  if (needs.ppg) guarded(f, "ppg", [&] { f.ppg = ppg::load_ppg_file(entry.ppg->string()); });
  for (const auto& tag : needs.embedding_tags) {
    guarded(f, kCosSimPrefix + tag, [&] {
      const auto records = text::load_embeddings_file(entry.embeddings.at(tag).string());
      if (records.empty()) throw Error(Errc::empty_input, "embedding file holds no vectors");
      const text::EmbeddingVector& v = records.front().embedding;
      if (v.source_tag != tag) {
        throw Error(Errc::incompatible_inputs,
                    "embedding file declares source_tag '" + v.source_tag + "', manifest says '" + tag + "'");
      }
      f.embeddings[tag] = v;
    });
  }
  return f;
}

const std::string& feature_error(const Features& f, const std::string& feature) {
  static const std::string unknown = "feature unavailable";
  auto it = f.errors.find(feature);
  return it == f.errors.end() ? unknown : it->second;
}

// Computes every selected metric for one utterance; each metric fails on
// its own.
std::vector<UtteranceValue> evaluate_utterance(const EvalManifest& m, const SystemEntry& sys,
                                               const std::string& utt, const Features& ref, const Features& hyp,
                                               const std::map<std::string, text::TranscriptPair>* transcripts,
                                               const std::vector<std::string>& metrics) {
  std::vector<UtteranceValue> out;
  std::optional<dtw::DtwResult> cep_path;
  std::string cep_error;
  if (ref.cepstrum && hyp.cepstrum) {
    try {
      auto r = spectral::mcd(*ref.cepstrum, *hyp.cepstrum);
      cep_path = std::move(r.alignment);
    } catch (const std::exception& e) {
      cep_error = e.what();
    }
  } else if (!ref.cepstrum || !hyp.cepstrum) {
    cep_error = !ref.cepstrum ? "ground truth: " + feature_error(ref, "cepstrum")
                              : "system: " + feature_error(hyp, "cepstrum");
  }
  std::optional<pitch::F0Metrics> f0m;
  std::string f0_error;
  if (std::any_of(metrics.begin(), metrics.end(), is_f0_metric)) {
    if (!cep_path) {
      f0_error = cep_error;
    } else if (!ref.f0 || !hyp.f0) {
      f0_error = !ref.f0 ? "ground truth: " + feature_error(ref, "f0") : "system: " + feature_error(hyp, "f0");
    } else {
      try {
        f0m = pitch::f0_metrics(*ref.f0, *hyp.f0, cep_path->path);
      } catch (const std::exception& e) {
        f0_error = e.what();
      }
    }
  }

  for (const auto& metric : metrics) {
    UtteranceValue v{sys.name, utt, metric, std::nullopt, {}};
    try {
      auto require = [](bool ok, const std::string& why) {
        if (!ok) throw Error(Errc::undefined_metric, why);
      };
      auto both = [&](const char* feature, bool r, bool h) {
        require(r, std::string("ground truth: ") + feature_error(ref, feature));
        require(h, std::string("system: ") + feature_error(hyp, feature));
      };
      if (metric == "vf_rmse") {
        both("formants", ref.formants.has_value(), hyp.formants.has_value());
        v.value = formant::vf_rmse(formant::pair_measurements(*ref.formants, *hyp.formants)).pooled;
      } else if (metric == "ppg_cossim" || metric == "ppg_js") {
        both("ppg", ref.ppg.has_value(), hyp.ppg.has_value());
        const auto s = ppg::ppg_similarity(*ref.ppg, *hyp.ppg);
        v.value = metric == "ppg_cossim" ? s.cossim : s.js;
      } else if (is_embedding_metric(metric)) {
        const std::string tag = metric.substr(std::char_traits<char>::length(kCosSimPrefix));
        both(metric.c_str(), ref.embeddings.count(tag) > 0, hyp.embeddings.count(tag) > 0);
        v.value = text::cosine_similarity(ref.embeddings.at(tag), hyp.embeddings.at(tag));
      } else if (metric == "wer" || metric == "cer") {
        require(transcripts != nullptr, "no transcripts for system");
        auto it = transcripts->find(utt);
        require(it != transcripts->end(), "no transcript for utterance");
        v.value = metric == "wer" ? text::wer(it->second, m.normalize_text) : text::cer(it->second, m.normalize_text);
      } else if (metric == "mcd") {
        require(cep_path.has_value(), cep_error);
        v.value = cep_path->mean_cost;
      } else if (is_f0_metric(metric)) {
        require(f0m.has_value(), f0_error);
        if (metric == "f0_per_rmse") {
          v.value = f0m->per_rmse;
        } else if (metric == "f0_rmse") {
          require(f0m->f0_rmse.has_value(), "fewer than two co-voiced frames");
          v.value = f0m->f0_rmse;
        } else {
          require(f0m->f0_pcc.has_value(), "F0 correlation undefined (too few co-voiced frames or constant F0)");
          v.value = f0m->f0_pcc;
        }
      }
    } catch (const std::exception& e) {
      v.error = e.what();
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string format_value(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "nan"; }

std::string direction_suffix(stats::Direction d) { return d == stats::Direction::higher_better ? "up" : "down"; }

stats::Direction direction_of(const MetricReport& r, const std::string& metric) {
  if (!r.systems.empty()) {
    for (const auto& m : r.systems.front().metrics) {
      if (m.metric == metric) return m.direction;
    }
  }
  return metric_direction(metric);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

void attach_footer(MetricReport& r, const stats::SrccOptions& opts) {
  stats::MetricTable table;
  for (const auto& s : r.systems) {
    table.systems.push_back(s.name);
    table.hypothesized_rank.push_back(s.hypothesized_rank);
  }
  r.footer.clear();
  for (std::size_t k = 0; k < r.metrics.size(); ++k) {
    stats::SrccResult undefined;
    undefined.metric = r.metrics[k];
    stats::MetricColumn col{r.metrics[k], metric_direction(r.metrics[k]), {}};
    bool complete = true;
    for (const auto& s : r.systems) {
      if (!s.metrics[k].mean) {
        complete = false;
        break;
      }
      col.values.push_back(*s.metrics[k].mean);
    }
    if (!complete) {
      undefined.note = "undefined: a system has no valid utterances";
    } else if (r.systems.size() < 3) {
      undefined.note = "undefined: rank correlation needs at least three systems";
    } else {
      table.metrics = {col};
      try {
        r.footer.push_back(stats::srcc_vs_hypothesis(table, opts).front());
        if (!r.footer.back().rho) spdlog::warn("SRCC for {} is undefined: every system has the same value", col.name);
        continue;
      } catch (const Error& e) {
        undefined.note = std::string("undefined: ") + e.what();
      }
    }
    r.footer.push_back(std::move(undefined));
  }
}

void finish_metadata(MetricReport& r) {
  r.metadata["toolkit_version"] = kToolkitVersion;
  r.metadata["timestamp"] = utc_timestamp();
  r.metadata.erase("content_hash");
  r.metadata["content_hash"] = content_hash(r);
}

}  // namespace

EvalManifest parse_manifest(const json& j, const fs::path& base_dir) {
  check_keys(j, {"utterances", "ground_truth", "systems", "tier", "exclude_reduced_vowels", "normalize_text"},
             "manifest root");
  EvalManifest m;
  if (j.contains("tier")) m.tier = get_field<std::string>(j, "tier", "manifest root");
  if (j.contains("exclude_reduced_vowels")) {
    m.exclude_reduced_vowels = get_field<bool>(j, "exclude_reduced_vowels", "manifest root");
  }
  if (j.contains("normalize_text")) m.normalize_text = get_field<bool>(j, "normalize_text", "manifest root");

  if (!j.contains("utterances")) config_error("manifest lacks 'utterances'");
  const json& utts = j.at("utterances");
  if (!utts.is_array()) config_error("'utterances' must be an array");
  std::set<std::string> seen;
  for (const auto& u : utts) {
    Utterance utt;
    if (u.is_string()) {
      utt.id = u.get<std::string>();
    } else {
      check_keys(u, {"id", "text"}, "utterance");
      utt.id = get_field<std::string>(u, "id", "utterance");
      utt.text = u.value("text", std::string());
    }
    if (!seen.insert(utt.id).second) config_error("duplicate utterance id '" + utt.id + "'");
    m.utterances.push_back(std::move(utt));
  }

  if (!j.contains("ground_truth")) config_error("manifest lacks 'ground_truth'");
  m.ground_truth = parse_system(j.at("ground_truth"), base_dir, true);

  const json& systems = j.contains("systems") ? j.at("systems") : json::array();
  if (!systems.is_array()) config_error("'systems' must be an array");
  std::set<std::string> names;
  std::vector<int> ranks;
  for (const auto& s : systems) {
    m.systems.push_back(parse_system(s, base_dir, false));
    if (!names.insert(m.systems.back().name).second) config_error("duplicate system '" + m.systems.back().name + "'");
    ranks.push_back(m.systems.back().hypothesized_rank);
  }
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i + 1)) {
      config_error("hypothesized ranks must be a permutation of 1.." + std::to_string(ranks.size()));
    }
  }
  return m;
}

EvalManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

std::vector<std::string> known_metrics(const EvalManifest& m) {
  std::vector<std::string> out = fixed_metrics_before_embeddings();
  std::set<std::string> tags;
  for (const auto& [_, e] : m.ground_truth.entries) {
    for (const auto& [tag, __] : e.embeddings) tags.insert(tag);
  }
  for (const auto& tag : tags) out.push_back(kCosSimPrefix + tag);
  for (const auto& name : fixed_metrics_after_embeddings()) out.push_back(name);
  return out;
}

stats::Direction metric_direction(const std::string& metric) {
  if (metric == "ppg_cossim" || metric == "f0_pcc" || is_embedding_metric(metric)) return stats::Direction::higher_better;
  return stats::Direction::lower_better;
}

std::vector<std::string> select_metrics(const EvalManifest& m, const std::string& selector) {
  const auto known = known_metrics(m);
  std::set<std::string> wanted;
  std::stringstream ss(selector);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "all") {
      wanted.insert(known.begin(), known.end());
    } else if (item == "cossim") {
      for (const auto& k : known) {
        if (is_embedding_metric(k)) wanted.insert(k);
      }
    } else if (std::find(known.begin(), known.end(), item) != known.end() || is_embedding_metric(item)) {
      wanted.insert(item);
    } else {
      throw Error(Errc::config, "unknown metric '" + item + "'");
    }
  }
  std::vector<std::string> out;
  for (const auto& k : known) {
    if (wanted.erase(k)) out.push_back(k);
  }
  out.insert(out.end(), wanted.begin(), wanted.end());
  if (out.empty()) throw Error(Errc::config, "no metrics selected");
  return out;
}

void validate_inputs(const EvalManifest& m, const std::vector<std::string>& metrics) {
  const Needs needs = needs_for(metrics);
  const bool audio = needs.formants || needs.cepstrum || needs.f0;
  const bool text = std::find(metrics.begin(), metrics.end(), "wer") != metrics.end() ||
                    std::find(metrics.begin(), metrics.end(), "cer") != metrics.end();
  std::vector<std::string> problems;
  auto missing = [&](const std::string& what) {
    if (problems.size() < 20) problems.push_back(what);
  };
  auto check_path = [&](const std::optional<fs::path>& p, const std::string& what) {
    if (!p) {
      missing(what + " is not declared");
    } else if (!fs::exists(*p)) {
      missing(what + " does not exist: " + p->string());
    }
  };
  auto check_system = [&](const SystemEntry& s, bool ground_truth) {
    if (!ground_truth && text) check_path(s.transcripts, "'" + s.name + "' transcripts");
    if (needs.formants && (s.formant_ceiling < 3500.0 || s.formant_ceiling > 7000.0)) {
      missing("'" + s.name + "' formant_ceiling must lie in [3500, 7000] Hz");
    }
    for (const auto& u : m.utterances) {
      const std::string where = "'" + s.name + "' utterance '" + u.id + "'";
      auto it = s.entries.find(u.id);
      if (it == s.entries.end()) {
        if (audio || needs.ppg || !needs.embedding_tags.empty()) missing(where + " has no entry");
        continue;
      }
      const UtteranceEntry& e = it->second;
      if (audio) check_path(e.audio, where + " audio");
      if (needs.formants) check_path(e.alignment, where + " alignment");
      if (needs.ppg) check_path(e.ppg, where + " PPG");
      for (const auto& tag : needs.embedding_tags) {
        auto et = e.embeddings.find(tag);
        check_path(et == e.embeddings.end() ? std::nullopt : std::optional<fs::path>(et->second),
                   where + " embedding '" + tag + "'");
      }
    }
  };
  check_system(m.ground_truth, true);
  for (const auto& s : m.systems) check_system(s, false);
  if (!problems.empty()) {
    std::string msg = "missing inputs for the selected metrics:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::config, msg);
  }
}

MetricReport run_report(const EvalManifest& m, const std::vector<std::string>& metrics, const ReportOptions& opts) {
  validate_inputs(m, metrics);
  const Needs needs = needs_for(metrics);

  std::vector<std::optional<std::map<std::string, text::TranscriptPair>>> transcripts(m.systems.size());
  for (std::size_t s = 0; s < m.systems.size(); ++s) {
    if (!m.systems[s].transcripts) continue;
    std::map<std::string, text::TranscriptPair> by_utt;
    for (auto& rec : text::load_transcripts_file(m.systems[s].transcripts->string())) {
      by_utt[rec.utterance_id] = std::move(rec.pair);
    }
    transcripts[s] = std::move(by_utt);
  }

  const std::size_t n_utt = m.utterances.size();
  std::vector<Features> reference(n_utt);
  parallel_for(n_utt, opts.jobs, [&](std::size_t u) {
    auto it = m.ground_truth.entries.find(m.utterances[u].id);
    if (it != m.ground_truth.entries.end()) reference[u] = compute_features(m, m.ground_truth, it->second, needs);
  });

  const std::size_t n_items = m.systems.size() * n_utt;
  std::vector<std::vector<UtteranceValue>> results(n_items);
  parallel_for(n_items, opts.jobs, [&](std::size_t item) {
    const std::size_t s = item / n_utt;
    const std::size_t u = item % n_utt;
    const SystemEntry& sys = m.systems[s];
    const std::string& utt = m.utterances[u].id;
    auto it = sys.entries.find(utt);
    const Features hyp = it == sys.entries.end() ? Features{} : compute_features(m, sys, it->second, needs);
    results[item] = evaluate_utterance(m, sys, utt, reference[u], hyp, transcripts[s] ? &*transcripts[s] : nullptr,
                                       metrics);
  });

  MetricReport r;
  r.metrics = metrics;
  std::set<std::string> mcep_fingerprints;
  for (const auto& f : reference) {
    if (f.cepstrum) mcep_fingerprints.insert(f.cepstrum->config_fingerprint);
  }
  for (std::size_t s = 0; s < m.systems.size(); ++s) {
    SystemSummary summary{m.systems[s].name, m.systems[s].hypothesized_rank, {}};
    std::vector<double> sums(metrics.size(), 0.0);
    for (const auto& metric : metrics) summary.metrics.push_back({metric, metric_direction(metric), std::nullopt, 0, 0});
    for (std::size_t u = 0; u < n_utt; ++u) {
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        const UtteranceValue& v = results[s * n_utt + u][k];
        if (v.value) {
          sums[k] += *v.value;
          ++summary.metrics[k].count;
          spdlog::debug("{}\t{}\t{}\t{}", v.system, v.utterance, v.metric, *v.value);
        } else {
          ++summary.metrics[k].skipped;
          spdlog::warn("skipped {} for {}/{}: {}", v.metric, v.system, v.utterance, v.error);
        }
        r.utterance_values.push_back(v);
      }
    }
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      if (summary.metrics[k].count > 0) summary.metrics[k].mean = sums[k] / static_cast<double>(summary.metrics[k].count);
    }
    r.systems.push_back(std::move(summary));
  }
  attach_footer(r, opts.srcc);

  r.metadata["mode"] = "computed";
  r.metadata["aggregation"] = "arithmetic mean of per-utterance values";
  r.metadata["utterances"] = n_utt;
  r.metadata["fingerprints"] = {
      {"mcep", json(std::vector<std::string>(mcep_fingerprints.begin(), mcep_fingerprints.end()))},
      {"f0", "yin;fmin=50;fmax=600;frame=0.04;hop=0.01;threshold=0.15;centre=0.025"},
      {"formant", fmt::format("burg;order=10;window=0.025;pre_emphasis=0.97;tier={};exclude_reduced={}", m.tier,
                              m.exclude_reduced_vowels)},
      {"ppg", "dtw;steps=(1,0),(0,1),(1,1);average=path_length;js_log=2"},
      {"text", fmt::format("normalize={}", m.normalize_text)},
  };
  finish_metadata(r);
  return r;
}

MetricReport precomputed_report(const stats::MetricTable& t, const stats::SrccOptions& opts) {
  stats::validate(t);
  MetricReport r;
  for (const auto& col : t.metrics) r.metrics.push_back(col.name);
  for (std::size_t s = 0; s < t.systems.size(); ++s) {
    SystemSummary summary{t.systems[s], t.hypothesized_rank[s], {}};
    for (const auto& col : t.metrics) summary.metrics.push_back({col.name, col.direction, col.values[s], 1, 0});
    r.systems.push_back(std::move(summary));
  }
  r.footer = stats::srcc_vs_hypothesis(t, opts);
  r.metadata["mode"] = "precomputed";
  r.metadata["ties"] = opts.ties == stats::TiePolicy::average ? "average" : "ordinal";
  r.metadata["p_value"] = opts.p_method == stats::PValueMethod::exact ? "exact permutation" : "t approximation";
  finish_metadata(r);
  return r;
}

json to_json(const MetricReport& r) {
  json systems = json::array();
  for (const auto& s : r.systems) {
    json metrics = json::object();
    for (const auto& m : s.metrics) {
      metrics[m.metric] = {{"mean", m.mean ? json(*m.mean) : json(nullptr)},
                           {"count", m.count},
                           {"skipped", m.skipped}};
    }
    systems.push_back({{"name", s.name}, {"hypothesized_rank", s.hypothesized_rank}, {"metrics", metrics}});
  }
  json footer = json::object();
  for (const auto& f : r.footer) {
    footer[f.metric] = {{"direction", direction_suffix(direction_of(r, f.metric))},
                        {"srcc", f.rho ? json(*f.rho) : json(nullptr)},
                        {"p", f.p ? json(*f.p) : json(nullptr)},
                        {"significant", f.significant},
                        {"note", f.note}};
  }
  json out = {{"metrics", r.metrics}, {"systems", systems}, {"srcc", footer}, {"metadata", r.metadata}};
  if (!r.utterance_values.empty()) {
    json utts = json::array();
    for (const auto& v : r.utterance_values) {
      utts.push_back({{"system", v.system},
                      {"utterance", v.utterance},
                      {"metric", v.metric},
                      {"value", v.value ? json(*v.value) : json(nullptr)},
                      {"error", v.error}});
    }
    out["per_utterance"] = std::move(utts);
  }
  return out;
}

std::string content_hash(const MetricReport& r) {
  json j = to_json(r);
  j["metadata"].erase("timestamp");
  j["metadata"].erase("content_hash");
  return fmt::format("fnv1a64:{:016x}", fnv1a(j.dump()));
}

void write_tsv(std::ostream& out, const MetricReport& r) {
  for (const auto& [key, value] : r.metadata.items()) {
    out << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  out << "system\thyp_rank";
  for (std::size_t k = 0; k < r.metrics.size(); ++k) {
    out << '\t' << r.metrics[k] << ':' << direction_suffix(direction_of(r, r.metrics[k]));
  }
  out << '\n';
  for (const auto& s : r.systems) {
    out << s.name << '\t' << s.hypothesized_rank;
    for (const auto& m : s.metrics) out << '\t' << format_value(m.mean);
    out << '\n';
  }
  auto footer_row = [&](const char* label, auto&& cell) {
    out << '#' << label << '\t';
    for (const auto& m : r.footer) out << '\t' << cell(m);
    out << '\n';
  };
  footer_row("count", [&](const stats::SrccResult& f) {
    std::size_t total = 0;
    for (const auto& s : r.systems) {
      for (const auto& m : s.metrics) total += m.metric == f.metric ? m.count : 0;
    }
    return std::to_string(total);
  });
  footer_row("skipped", [&](const stats::SrccResult& f) {
    std::size_t total = 0;
    for (const auto& s : r.systems) {
      for (const auto& m : s.metrics) total += m.metric == f.metric ? m.skipped : 0;
    }
    return std::to_string(total);
  });
  footer_row("srcc", [](const stats::SrccResult& f) { return f.rho ? fmt::format("{:.4f}", *f.rho) : "undefined"; });
  footer_row("p", [](const stats::SrccResult& f) {
    return f.p ? fmt::format("{:.4f}{}", *f.p, f.significant ? "" : "+") : "undefined";
  });
  for (const auto& f : r.footer) {
    if (!f.note.empty()) out << "# note " << f.metric << ": " << f.note << '\n';
  }
  out << "# '+' marks p >= 0.05 (not significant)\n";
}

json export_vowel_space(const EvalManifest& m, const std::optional<std::vector<std::string>>& systems,
                        std::size_t jobs) {
  json out = json::object();
  if (systems && systems->empty()) return out;
  EvalManifest subset = m;
  if (systems) {
    subset.systems.clear();
    for (const auto& name : *systems) {
      if (name == m.ground_truth.name) continue;
      auto it = std::find_if(m.systems.begin(), m.systems.end(), [&](const SystemEntry& s) { return s.name == name; });
      if (it == m.systems.end()) throw Error(Errc::config, "unknown system '" + name + "'");
      subset.systems.push_back(*it);
    }
  }
  validate_inputs(subset, {"vf_rmse"});
  std::vector<const SystemEntry*> chosen{&subset.ground_truth};
  for (const auto& s : subset.systems) chosen.push_back(&s);

  Needs needs;
  needs.formants = true;
  std::vector<std::vector<Features>> features(chosen.size(), std::vector<Features>(m.utterances.size()));
  parallel_for(chosen.size() * m.utterances.size(), jobs, [&](std::size_t item) {
    const std::size_t s = item / m.utterances.size();
    const std::size_t u = item % m.utterances.size();
    const auto& entry = chosen[s]->entries.at(m.utterances[u].id);
    features[s][u] = compute_features(m, *chosen[s], entry, needs);
    if (!features[s][u].formants) {
      throw Error(Errc::formant_extraction_failed, "'" + chosen[s]->name + "' utterance '" + m.utterances[u].id +
                                                       "': " + feature_error(features[s][u], "formants"));
    }
  });
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    std::map<std::string, std::vector<formant::FormantMeasurement>> per_speaker;
    auto& bucket = per_speaker[chosen[s]->speaker];
    for (const auto& f : features[s]) {
      bucket.insert(bucket.end(), f.formants->measurements.begin(), f.formants->measurements.end());
    }
    json speakers = json::object();
    for (const auto& [speaker, summary] : formant::vowel_space_summary(per_speaker)) speakers[speaker] = formant::to_json(summary);
    out[chosen[s]->name] = std::move(speakers);
  }
  return out;
}

}  // namespace accent_eval::harness
