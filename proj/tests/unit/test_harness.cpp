#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "accent_eval/error.hpp"
#include "accent_eval/harness.hpp"
#include "oracles.hpp"

using namespace accent_eval;
using nlohmann::json;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string textgrid(double total) {
  return fmt::format(R"(File type = "ooTextFile"
Object class = "TextGrid"
xmin = 0
xmax = {0}
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = {0}
        intervals: size = 2
        intervals [1]:
            xmin = 0
            xmax = 0.3
            text = "AA1"
        intervals [2]:
            xmin = 0.3
            xmax = {0}
            text = "IY1"
)",
                     total);
}

// A ground-truth speaker plus three systems whose vowels drift further
// from it: "same" reuses the reference files, "near" and "far" shift the
// formants, PPGs, embeddings and transcripts by growing amounts.
struct Corpus {
  fs::path dir = oracle::temp_dir("harness");
  fs::path manifest = dir / "manifest.json";

  void write_speaker(const std::string& name, double shift, const std::string& hyp_text) {
    const fs::path d = dir / name;
    fs::create_directories(d);
    for (const std::string utt : {"u1", "u2"}) {
      const double u = utt == "u1" ? 0.0 : 30.0;
      auto a = oracle::two_resonator_vowel(700.0 * (1 + shift) + u, 1200.0 * (1 + shift), 16000, 0.3, 120.0);
      const auto b = oracle::two_resonator_vowel(300.0 * (1 + shift), 2300.0 * (1 - shift) - u, 16000, 0.3, 150.0);
      a.insert(a.end(), b.begin(), b.end());
      oracle::write_wav16(d / (utt + ".wav"), a, 16000);
      write_text(d / (utt + ".TextGrid"), textgrid(0.6));
      const double q = 0.7 - shift;
      write_text(d / (utt + ".ppg.csv"), fmt::format("#hop=0.01\nAA,IY,sil\n{0},{1},0.1\n{1},{0},0.1\n{0},{1},0.1\n",
                                                      q, 0.9 - q));
      write_text(d / (utt + ".wavlm.json"),
                 json{{"source_tag", "wavlm"}, {"utterance_id", utt}, {"values", {1.0, shift, 0.5}}}.dump());
    }
    std::ofstream tr(d / "transcripts.jsonl");
    tr << json{{"utterance_id", "u1"}, {"reference", "the cat sat"}, {"hypothesis", hyp_text}}.dump() << "\n";
    tr << json{{"utterance_id", "u2"}, {"reference", "on the mat"}, {"hypothesis", "on the mat"}}.dump() << "\n";
  }

  json system_json(const std::string& name, const std::string& dir_name, int rank) const {
    json entries = json::object();
    for (const std::string utt : {"u1", "u2"}) {
      entries[utt] = {{"audio", dir_name + "/" + utt + ".wav"},
                      {"alignment", dir_name + "/" + utt + ".TextGrid"},
                      {"ppg", dir_name + "/" + utt + ".ppg.csv"},
                      {"embeddings", {{"wavlm", dir_name + "/" + utt + ".wavlm.json"}}}};
    }
    json s = {{"name", name}, {"entries", entries}, {"transcripts", dir_name + "/transcripts.jsonl"}};
    if (rank > 0) s["hypothesized_rank"] = rank;
    return s;
  }

  json manifest_json() const {
    return {{"utterances", {{{"id", "u1"}, {"text", "the cat sat"}}, "u2"}},
            {"ground_truth", system_json("ground_truth", "gt", 0)},
            {"systems",
             {system_json("same", "gt", 1), system_json("near", "near", 2), system_json("far", "far", 3)}}};
  }

  Corpus() {
    write_speaker("gt", 0.0, "the cat sat");
    write_speaker("near", 0.05, "the cat sat");
    write_speaker("far", 0.2, "a cat sat down");
    write_text(manifest, manifest_json().dump(2));
  }
  ~Corpus() { fs::remove_all(dir); }
};

const harness::MetricSummary& summary(const harness::MetricReport& r, const std::string& system,
                                      const std::string& metric) {
  for (const auto& s : r.systems) {
    if (s.name != system) continue;
    for (const auto& m : s.metrics) {
      if (m.metric == metric) return m;
    }
  }
  throw std::runtime_error("no summary for " + system + "/" + metric);
}

}  // namespace

TEST_CASE("manifest parsing resolves paths and lists metrics") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  CHECK(m.utterances.size() == 2);
  CHECK(m.utterances[1].id == "u2");
  CHECK(m.systems.size() == 3);
  CHECK(m.ground_truth.entries.at("u1").audio->is_absolute());
  const auto all = harness::known_metrics(m);
  CHECK(all == std::vector<std::string>{"vf_rmse", "ppg_cossim", "ppg_js", "cossim:wavlm", "wer", "cer", "mcd",
                                        "f0_rmse", "f0_per_rmse", "f0_pcc"});
  CHECK(harness::select_metrics(m, "mcd,cossim") == std::vector<std::string>{"cossim:wavlm", "mcd"});
  CHECK(harness::metric_direction("ppg_cossim") == stats::Direction::higher_better);
  CHECK(harness::metric_direction("ppg_js") == stats::Direction::lower_better);
  CHECK_THROWS_AS(harness::select_metrics(m, "bleu"), Error);
}

TEST_CASE("malformed manifests are configuration errors") {
  Corpus c;
  auto code_for = [&](const json& j) {
    try {
      harness::parse_manifest(j, c.dir);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::state;
  };
  json j = c.manifest_json();
  j["colour"] = "blue";
  CHECK(code_for(j) == Errc::config);
  j = c.manifest_json();
  j["systems"][2]["hypothesized_rank"] = 2;
  CHECK(code_for(j) == Errc::config);
  j = c.manifest_json();
  j.erase("ground_truth");
  CHECK(code_for(j) == Errc::config);
  write_text(c.dir / "broken.json", "{\"utterances\": [");
  CHECK_THROWS_AS(harness::load_manifest(c.dir / "broken.json"), ParseError);
}

TEST_CASE("missing inputs are reported before any computation") {
  Corpus c;
  json j = c.manifest_json();
  j["systems"][1]["entries"]["u2"].erase("ppg");
  const auto m = harness::parse_manifest(j, c.dir);
  try {
    harness::validate_inputs(m, {"ppg_js"});
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("near") != std::string::npos);
  }
  CHECK_NOTHROW(harness::validate_inputs(m, {"mcd", "wer"}));
  fs::remove(c.dir / "far" / "u1.wav");
  CHECK_THROWS_AS(harness::validate_inputs(harness::load_manifest(c.manifest), {"mcd"}), Error);
}

TEST_CASE("identical inputs give ideal scores and the drift ordering is recovered") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  harness::ReportOptions opts;
  opts.jobs = 3;
  const auto r = harness::run_report(m, harness::known_metrics(m), opts);

  CHECK(*summary(r, "same", "vf_rmse").mean == 0.0);
  CHECK(*summary(r, "same", "ppg_cossim").mean == 1.0);
  CHECK(*summary(r, "same", "ppg_js").mean == 0.0);
  CHECK_THAT(*summary(r, "same", "cossim:wavlm").mean, WithinAbs(1.0, 1e-12));
  CHECK(*summary(r, "same", "wer").mean == 0.0);
  CHECK(*summary(r, "same", "cer").mean == 0.0);
  CHECK(*summary(r, "same", "mcd").mean == 0.0);
  CHECK(*summary(r, "same", "f0_rmse").mean == 0.0);
  CHECK(*summary(r, "same", "f0_per_rmse").mean == 0.0);
  CHECK_THAT(*summary(r, "same", "f0_pcc").mean, WithinAbs(1.0, 1e-12));
  CHECK(summary(r, "same", "mcd").count == 2);
  CHECK(summary(r, "same", "mcd").skipped == 0);

  CHECK(*summary(r, "near", "vf_rmse").mean < *summary(r, "far", "vf_rmse").mean);
  CHECK(*summary(r, "near", "mcd").mean < *summary(r, "far", "mcd").mean);
  // 2/3 on u1 and 0 on u2, averaged per utterance.
  CHECK_THAT(*summary(r, "far", "wer").mean, WithinAbs(1.0 / 3.0, 1e-12));

  for (const auto& f : r.footer) {
    if (f.metric == "vf_rmse" || f.metric == "ppg_js" || f.metric == "mcd" || f.metric == "ppg_cossim") {
      REQUIRE(f.rho);
      CHECK(*f.rho == 1.0);
    }
  }
}

TEST_CASE("system means are the mean of the per-utterance values") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  const auto r = harness::run_report(m, harness::known_metrics(m));
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const auto& v : r.utterance_values) {
    if (v.value) values[{v.system, v.metric}].push_back(*v.value);
  }
  for (const auto& s : r.systems) {
    for (const auto& ms : s.metrics) {
      const auto& vals = values[{s.name, ms.metric}];
      REQUIRE(vals.size() == ms.count);
      if (vals.empty()) continue;
      double sum = 0.0;
      for (double v : vals) sum += v;
      CHECK_THAT(*ms.mean, WithinAbs(sum / static_cast<double>(vals.size()), 1e-12));
    }
  }
}

TEST_CASE("reports are deterministic across thread counts") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  const auto metrics = harness::known_metrics(m);
  harness::ReportOptions one;
  harness::ReportOptions four;
  four.jobs = 4;
  const auto a = harness::run_report(m, metrics, one);
  const auto b = harness::run_report(m, metrics, four);
  CHECK(harness::content_hash(a) == harness::content_hash(b));
  CHECK(a.metadata.at("content_hash") == b.metadata.at("content_hash"));
  CHECK(harness::content_hash(a).rfind("fnv1a64:", 0) == 0);
  std::ostringstream ta;
  std::ostringstream tb;
  harness::write_tsv(ta, a);
  harness::write_tsv(tb, b);
  auto strip_timestamp = [](const std::string& s) {
    std::istringstream in(s);
    std::string line;
    std::string out;
    while (std::getline(in, line)) {
      if (line.find("timestamp") == std::string::npos) out += line + "\n";
    }
    return out;
  };
  CHECK(strip_timestamp(ta.str()) == strip_timestamp(tb.str()));
}

TEST_CASE("per-utterance failures are skipped and counted") {
  Corpus c;
  write_text(c.dir / "near" / "u2.ppg.csv", "#hop=0.01\nAA,IY,sil\n0.1,0.1,0.1\n");
  const auto m = harness::load_manifest(c.manifest);
  const auto r = harness::run_report(m, {"ppg_js", "mcd"});
  CHECK(summary(r, "near", "ppg_js").count == 1);
  CHECK(summary(r, "near", "ppg_js").skipped == 1);
  CHECK(summary(r, "near", "mcd").skipped == 0);
  bool logged = false;
  for (const auto& v : r.utterance_values) {
    if (v.system == "near" && v.utterance == "u2" && v.metric == "ppg_js") logged = !v.value && !v.error.empty();
  }
  CHECK(logged);
}

TEST_CASE("TSV output feeds back into the metric-table reader") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  const auto r = harness::run_report(m, {"vf_rmse", "mcd", "cossim:wavlm"});
  std::stringstream ss;
  harness::write_tsv(ss, r);
  const auto t = stats::read_metric_table(ss);
  CHECK(t.systems == std::vector<std::string>{"same", "near", "far"});
  REQUIRE(t.metrics.size() == 3);
  CHECK(t.metrics[2].name == "cossim:wavlm");
  CHECK(t.metrics[2].direction == stats::Direction::higher_better);
  CHECK(t.metrics[1].values[0] == 0.0);
}

TEST_CASE("precomputed tables produce the same footer as the stats module") {
  const auto t = stats::read_metric_table_file(ACCENT_EVAL_DATA_DIR "/seven_systems.tsv");
  const auto r = harness::precomputed_report(t);
  const auto direct = stats::srcc_vs_hypothesis(t);
  REQUIRE(r.footer.size() == direct.size());
  for (std::size_t k = 0; k < direct.size(); ++k) {
    CHECK(r.footer[k].rho == direct[k].rho);
    CHECK(r.footer[k].p == direct[k].p);
  }
  CHECK(r.metadata.at("mode") == "precomputed");
  const json j = harness::to_json(r);
  CHECK(j.at("systems").size() == 7);
}

TEST_CASE("vowel-space export") {
  Corpus c;
  const auto m = harness::load_manifest(c.manifest);
  const json all = harness::export_vowel_space(m);
  CHECK(all.contains("ground_truth"));
  CHECK(all.contains("far"));
  CHECK(all.at("far").at("speaker").contains("AA"));
  const json none = harness::export_vowel_space(m, std::vector<std::string>{});
  CHECK(none.empty());
  const json some = harness::export_vowel_space(m, std::vector<std::string>{"near"});
  CHECK(some.size() == 2);
  CHECK_THROWS_AS(harness::export_vowel_space(m, std::vector<std::string>{"nobody"}), Error);
}
