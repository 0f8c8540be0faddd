// accent-eval: command-line front end for the accent evaluation toolkit.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "accent_eval/error.hpp"
#include "accent_eval/harness.hpp"
#include "accent_eval/listen/http.hpp"
#include "accent_eval/listen/service.hpp"
#include "accent_eval/stats.hpp"

namespace {

using namespace accent_eval;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;

// Writes to the named file, or stdout for "" or "-".
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::config, "cannot write " + path);
  out << content;
}

stats::TiePolicy parse_ties(const std::string& s) {
  return s == "ordinal" ? stats::TiePolicy::ordinal : stats::TiePolicy::average;
}

std::string render(const harness::MetricReport& r, const std::string& format, bool verbose) {
  if (format == "json") {
    json j = harness::to_json(r);
    if (!verbose) j.erase("per_utterance");
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  harness::write_tsv(out, r);
  return out.str();
}

std::vector<double> read_proportions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot open submissions file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("submissions " + path + ": " + e.what());
  }
  const json& arr = j.is_object() && j.contains("proportions") ? j.at("proportions") : j;
  if (!arr.is_array()) throw ParseError("submissions must be an array of proportions or an object with 'proportions'");
  try {
    return arr.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("submissions: ") + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("accent-eval"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Accent similarity evaluation toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log per-utterance values and debug details");

  // report
  auto* report = app.add_subcommand("report", "Compute per-system metric means and rank correlations");
  std::string manifest;
  std::string metrics = "all";
  std::string out_format = "tsv";
  std::size_t jobs = 1;
  std::string output;
  std::string ties = "average";
  report->add_option("--manifest", manifest, "Evaluation manifest (JSON)")->required()->check(CLI::ExistingFile);
  report->add_option("--metrics", metrics, "Comma-separated metric names or 'all'");
  report->add_option("--out", out_format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
  report->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  report->add_option("-o,--output", output, "Output file (default stdout)");
  report->add_option("--ties", ties, "Rank tie policy")->check(CLI::IsMember({"average", "ordinal"}));

  // vowelspace
  auto* vowelspace = app.add_subcommand("vowelspace", "Export Lobanov-normalized vowel-space summaries");
  std::optional<std::string> systems;
  vowelspace->add_option("--manifest", manifest, "Evaluation manifest (JSON)")->required()->check(CLI::ExistingFile);
  vowelspace->add_option("--out", out_format, "Output format")->check(CLI::IsMember({"json"}));
  vowelspace->add_option("--systems", systems, "Comma-separated systems (default: all)");
  vowelspace->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  vowelspace->add_option("-o,--output", output, "Output file (default stdout)");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Rank correlations for a table of pre-computed metric means");
  std::string table;
  bool exact_p = false;
  stats_cmd->add_option("--table", table, "Metric table (TSV)")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--ties", ties, "Rank tie policy")->check(CLI::IsMember({"average", "ordinal"}));
  stats_cmd->add_flag("--exact-p", exact_p, "Exact permutation p-values (n <= 8)");
  stats_cmd->add_option("--out", out_format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
  stats_cmd->add_option("-o,--output", output, "Output file (default stdout)");

  // subset-curve
  auto* curve = app.add_subcommand("subset-curve", "Expected one-sided p-value against the number of submissions");
  std::string submissions;
  stats::SubsetCurveOptions curve_opts;
  curve->add_option("--submissions", submissions, "Per-listener proportions (JSON)")->required();
  curve->add_option("--repeats", curve_opts.repeats, "Resamples per subset size")->check(CLI::PositiveNumber);
  curve->add_option("--seed", curve_opts.seed, "PRNG seed");
  curve->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  curve->add_option("-o,--output", output, "Output file (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the listening-test HTTP service");
  std::string store;
  std::string audio_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--store", store, "Append-only JSON-lines store")->required();
  serve->add_option("--audio-dir", audio_dir, "Directory of <audio_id>.wav files");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*report) {
      const auto m = harness::load_manifest(manifest);
      harness::ReportOptions opts;
      opts.jobs = jobs;
      opts.srcc.ties = parse_ties(ties);
      const auto r = harness::run_report(m, harness::select_metrics(m, metrics), opts);
      emit(output, render(r, out_format, verbose));
    } else if (*vowelspace) {
      const auto m = harness::load_manifest(manifest);
      std::optional<std::vector<std::string>> chosen;
      if (systems) chosen = split_list(*systems);
      emit(output, harness::export_vowel_space(m, chosen, jobs).dump(2) + "\n");
    } else if (*stats_cmd) {
      stats::SrccOptions opts;
      opts.ties = parse_ties(ties);
      opts.p_method = exact_p ? stats::PValueMethod::exact : stats::PValueMethod::t_approximation;
      const auto r = harness::precomputed_report(stats::read_metric_table_file(table), opts);
      emit(output, render(r, out_format, false));
    } else if (*curve) {
      curve_opts.threads = jobs;
      const auto points = stats::pvalue_vs_subset_size({read_proportions(submissions)}, curve_opts);
      std::ostringstream out;
      stats::write_curve_csv(out, points);
      emit(output, out.str());
    } else if (*serve) {
      listen::ListenService service{std::filesystem::path(store)};
      listen::HttpServer server(service, listen::HttpOptions{audio_dir});
      spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
      spdlog::info("listening on {}:{}", host, port);
      if (!server.listen(host, port)) {
        spdlog::error("cannot bind {}:{}", host, port);
        return kExitConfig;
      }
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.code() == Errc::config || e.code() == Errc::validation) return kExitConfig;
    if (e.code() == Errc::parse) return kExitParse;
    return kExitFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return 0;
}
