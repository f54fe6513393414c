#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "retrial/cli.hpp"
#include "retrial/io.hpp"

using retrial::io::json;
namespace fs = std::filesystem;
namespace cli = retrial::cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "retrialq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "retrialq_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

const char* kLight = R"({"rates":{"lambda_minus":0.5,"lambda_e":0.5,"lambda_e_plus":0.5,"lambda_r":0.5,"lambda_r_plus":0.5},
  "service":{"kind":"exponential","rate":2},"seek":{"kind":"exponential","rate":3}})";
const char* kHeavy = R"({"rates":{"lambda_minus":1.6,"lambda_e":1.6,"lambda_e_plus":1.6,"lambda_r":1.6,"lambda_r_plus":1.6},
  "service":{"kind":"exponential","rate":2},"seek":{"kind":"exponential","rate":3}})";
const char* kNearCritical = R"({"rates":{"lambda_minus":1.35,"lambda_e":1.35,"lambda_e_plus":1.35,"lambda_r":1.35,"lambda_r_plus":1.35},
  "service":{"kind":"exponential","rate":2},"seek":{"kind":"exponential","rate":3}})";
const char* kProblem = R"({"lambda_plus":2.0,"lambda_minus":1.0,"M":4,"mu":1.5,"N":3,"alpha":3.0,"ex_bound":20.0,"ordering":true})";

json without_timestamp(const std::string& text) {
  json j = json::parse(text);
  j["manifest"].erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"analyze"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"analyze", "/nonexistent.json"}).code == cli::kUsage);
  CHECK(run({"analyze", write_temp("bad.json", "{\"rates\": ")}).code == cli::kUsage);
}

TEST_CASE("analyze") {
  const Result ok = run({"analyze", write_temp("light.json", kLight)});
  REQUIRE(ok.code == cli::kOk);
  const json j = json::parse(ok.out);
  CHECK(j["manifest"]["command"] == "analyze");
  CHECK(j["manifest"]["typo_ledger"].size() > 0);
  CHECK(j["report"]["pi0"] == 0.708333);
  CHECK(j["report"]["TH_S"] == 0.5);
  const Result bad = run({"analyze", write_temp("heavy.json", kHeavy)});
  CHECK(bad.code == cli::kUnstable);
  CHECK(json::parse(bad.out)["report"]["stable"] == false);
}

TEST_CASE("analyze writes to --out") {
  const std::string out = (fs::temp_directory_path() / "retrialq_cli_test" / "report.json").string();
  fs::remove(out);
  REQUIRE(run({"analyze", write_temp("light.json", kLight), "--out", out}).code == cli::kOk);
  std::ifstream in(out);
  CHECK(json::parse(in)["report"]["stable"] == true);
}

TEST_CASE("simulate is reproducible") {
  const std::string m = write_temp("light.json", kLight);
  const std::vector<std::string> args{"simulate", m, "--departures", "5000", "--reps", "3", "--seed", "7"};
  const Result a = run(args), b = run(args);
  REQUIRE(a.code == cli::kOk);
  CHECK(without_timestamp(a.out) == without_timestamp(b.out));
  CHECK(json::parse(a.out)["manifest"]["seed"] == 7);
  CHECK(run({"simulate", m, "--reps", "0"}).code == cli::kUsage);
}

TEST_CASE("validate") {
  const Result ok = run({"validate", write_temp("light.json", kLight), "--departures", "20000", "--reps", "5"});
  CHECK(ok.code == cli::kOk);
  const json j = json::parse(ok.out);
  CHECK(j["all_pass"] == true);
  CHECK(j["truncation"]["verdict"] == "pass");
  CHECK(run({"validate", write_temp("heavy.json", kHeavy)}).code == cli::kUnstable);
  CHECK(run({"validate", write_temp("near.json", kNearCritical), "--trunc", "10", "--departures", "1000",
             "--reps", "2"})
            .code == cli::kTruncation);
}

TEST_CASE("sweep") {
  const std::string m = write_temp("light.json", kLight);
  const Result r = run({"sweep", m, "--vary", "lambda_minus=0.25:0.75:0.25", "--metrics", "EX,margin"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream lines(r.out);
  std::string header, line;
  std::getline(lines, header);
  CHECK(header == "lambda_minus,EX,margin");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);
  CHECK(run({"sweep", m, "--vary", "colour=0:1:0.5"}).code == cli::kUsage);
  CHECK(run({"sweep", m, "--vary", "lambda_minus=0.1:0.2:0.1", "--metrics", "EX,nope"}).code == cli::kUsage);
  CHECK(run({"sweep", m, "--vary", "q1=0:1:0.5"}).code == cli::kUsage);
}

TEST_CASE("optimize") {
  const std::string p = write_temp("problem.json", kProblem);
  const std::string csv = (fs::temp_directory_path() / "retrialq_cli_test" / "opt.csv").string();
  const std::vector<std::string> args{"optimize", p, "--restarts", "4", "--seed", "3", "--csv", csv};
  const Result a = run(args), b = run(args);
  REQUIRE(a.code == cli::kOk);
  CHECK(without_timestamp(a.out) == without_timestamp(b.out));
  const json s = json::parse(a.out)["solution"];
  CHECK(s["feasible"] == true);
  CHECK(s["EX"].get<double>() <= 20.0 + 1e-6);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "q1,q2,q3,q4,TH");

  const std::string hopeless = write_temp(
      "hopeless.json",
      R"({"lambda_plus":1e6,"lambda_minus":1e6,"M":4,"mu":1.5,"N":3,"alpha":3.0,"ex_bound":0,"ordering":true})");
  CHECK(run({"optimize", hopeless, "--restarts", "2"}).code == cli::kInfeasible);
}

TEST_CASE("bounds") {
  const std::string m = write_temp(
      "profile.json",
      R"({"rates":{"lambda_minus":1,"lambda_e":0.5,"lambda_e_plus":0.5,"lambda_r":1,"lambda_r_plus":0.5},
          "service":{"kind":"erlang","phases":2,"rate":4},"seek":{"kind":"exponential","rate":3}})");
  const Result r = run({"bounds", m, "--seek-sequence", "erlang:2:5,erlang:2:40,deterministic:0"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "seek,alpha_star,lower,upper,tv_distance");
  std::vector<std::string> rows;
  while (std::getline(lines, row)) rows.push_back(row);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].find(",1,0,0,0") != std::string::npos);

  const std::string off = write_temp(
      "off.json",
      R"({"rates":{"lambda_minus":0.8,"lambda_e":0.6,"lambda_e_plus":0.3,"lambda_r":0.5,"lambda_r_plus":0.2},
          "service":{"kind":"erlang","phases":2,"rate":3},"seek":{"kind":"erlang","phases":2,"rate":4}})");
  CHECK(run({"bounds", off, "--seek-sequence", "exponential:3"}).code == cli::kUsage);
  CHECK(run({"bounds", off, "--seek-sequence", "exponential:3", "--no-tv"}).code == cli::kOk);
  CHECK(run({"bounds", off, "--seek-sequence", "gamma:3"}).code == cli::kUsage);
}
