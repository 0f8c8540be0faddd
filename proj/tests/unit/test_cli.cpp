#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "oracles.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(ACCENT_EVAL_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

}  // namespace

TEST_CASE("stats subcommand prints the table with a footer") {
  const auto r = run("stats --table " ACCENT_EVAL_DATA_DIR "/seven_systems.tsv");
  CHECK(r.code == 0);
  CHECK(r.out.find("#srcc\t\t0.9286\t0.9643") != std::string::npos);
  CHECK(r.out.find("system\thyp_rank\tvf_rmse:down") != std::string::npos);
  const auto exact = run("stats --exact-p --out json --table " ACCENT_EVAL_DATA_DIR "/seven_systems.tsv");
  CHECK(exact.code == 0);
  CHECK(exact.out.find("\"srcc\"") != std::string::npos);
}

TEST_CASE("exit codes distinguish usage, configuration and parse errors") {
  const auto dir = oracle::temp_dir("cli");
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("stats --table " + (dir / "missing.tsv").string()).code == 2);

  write(dir / "bad.tsv", "system\thyp_rank\tm:down\na\t1\tx\n");
  CHECK(run("stats --table " + (dir / "bad.tsv").string()).code == 3);
  write(dir / "ranks.tsv", "system\thyp_rank\tm:down\na\t1\t1\nb\t1\t2\nc\t2\t3\n");
  CHECK(run("stats --table " + (dir / "ranks.tsv").string()).code == 2);

  write(dir / "broken.json", "{");
  CHECK(run("report --manifest " + (dir / "broken.json").string()).code == 3);
  write(dir / "unknown.json", R"({"utterances":["u1"],"ground_truth":{},"extra":1})");
  CHECK(run("report --manifest " + (dir / "unknown.json").string()).code == 2);
  write(dir / "missing.json", R"({"utterances":["u1"],"ground_truth":{"entries":{"u1":{}}},
      "systems":[{"name":"s","hypothesized_rank":1,"entries":{"u1":{}}}]})");
  CHECK(run("report --metrics mcd --manifest " + (dir / "missing.json").string()).code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("subset-curve writes CSV") {
  const auto dir = oracle::temp_dir("cli_curve");
  write(dir / "p.json", R"({"proportions":[0.6,0.7,0.8,0.9,0.5]})");
  const auto r = run("subset-curve --repeats 50 --seed 3 --submissions " + (dir / "p.json").string());
  CHECK(r.code == 0);
  CHECK(r.out.rfind("k,mean_p,ci95\n2,", 0) == 0);
  CHECK(run("subset-curve --repeats 50 --jobs 3 --seed 3 --submissions " + (dir / "p.json").string()).out == r.out);
  write(dir / "short.json", "[0.5, 0.6]");
  CHECK(run("subset-curve --submissions " + (dir / "short.json").string()).code == 1);
  std::filesystem::remove_all(dir);
}
