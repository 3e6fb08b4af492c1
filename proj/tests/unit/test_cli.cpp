#include <corder/bundled.hpp>
#include <corder/expert.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace corder;

namespace {

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("corder_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CORDER_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  auto d = scratch("usage");
  EXPECT_EQ(run("elicit --graph nosuchgraph --expert perfect --output " + d.string()), 64);
  EXPECT_EQ(run("elicit --graph cancer --expert epsilon:0.2 --output " + d.string()), 64);  // no seed
  EXPECT_EQ(run("elicit --graph cancer --expert oracle --output " + d.string()), 64);
  EXPECT_EQ(run("elicit --graph cancer --expert perfect --method pairwise --k 2 --output " + d.string()), 64);
  EXPECT_EQ(run("discover --data " + (d / "missing.csv").string() + " --output " + d.string()), 64);
  EXPECT_EQ(run("bogus"), 64);
}

TEST(Cli, ElicitWritesOutputsAndManifest) {
  auto d = scratch("elicit");
  ASSERT_EQ(run("elicit --graph asia --expert perfect --method triplet --output " + d.string()), 0);
  for (const char* f : {"transcript.jsonl", "report.json", "merged.edges", "final.edges", "order.txt",
                        "pruned_order.txt", "manifest.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  auto report = json::parse(slurp(d / "report.json"));
  EXPECT_EQ(report["metrics"]["dtop"], 0);
  auto m = json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(m["command"], "elicit");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["config"]["graph"], "asia");
  EXPECT_TRUE(m["versions"].contains("compiler"));
  EXPECT_GE(parse_transcript(slurp(d / "transcript.jsonl")).size(), 56u);
}

TEST(Cli, MalformedDataExits65) {
  auto d = scratch("data");
  spit(d / "bad.csv", "a,b\n1\n");
  EXPECT_EQ(run("discover --data " + (d / "bad.csv").string() + " --output " + d.string()), 65);
  EXPECT_TRUE(fs::exists(d / "manifest.json"));
}

TEST(Cli, CycleExits3WithFailOnCycle) {
  auto d = scratch("cycle");
  spit(d / "g.edges", "a -> b\nb -> c\n");
  VariableSet vars({"a", "b", "c"});
  std::string transcript;
  auto rec = [&](NodeId x, NodeId y, Choice c) {
    TranscriptRecord r;
    r.query = make_pair_query(vars, x, y);
    r.raw_response = std::string(1, choice_letter(c));
    r.parsed = PairVerdict{c, ""};
    transcript += transcript_line(r) + "\n";
  };
  rec(0, 1, Choice::Forward);
  rec(0, 2, Choice::Backward);
  rec(1, 2, Choice::Forward);
  spit(d / "answers.jsonl", transcript);
  const std::string base = "elicit --graph " + (d / "g.edges").string() + " --method pairwise --expert replay:" +
                           (d / "answers.jsonl").string() + " --output " + d.string();
  EXPECT_EQ(run(base), 0);
  auto report = json::parse(slurp(d / "report.json"));
  EXPECT_TRUE(report["order"].is_null());
  EXPECT_EQ(report["cycles_before_prune"], 1);
  EXPECT_EQ(run(base + " --fail-on-cycle"), 3);
  EXPECT_EQ(json::parse(slurp(d / "manifest.json"))["exit_code"], 3);
}

TEST(Cli, ExpertFailureExits2AndKeepsPartialTranscript) {
  auto d = scratch("expertfail");
  spit(d / "g.edges", "a -> b\nb -> c\n");
  VariableSet vars({"a", "b", "c"});
  TranscriptRecord r;
  r.query = make_pair_query(vars, 0, 1);
  r.raw_response = "A";
  r.parsed = PairVerdict{Choice::Forward, ""};
  spit(d / "answers.jsonl", transcript_line(r) + "\n");
  EXPECT_EQ(run("elicit --graph " + (d / "g.edges").string() + " --method pairwise --strategy iterative --expert replay:" +
                (d / "answers.jsonl").string() + " --output " + d.string()),
            2);
  EXPECT_EQ(parse_transcript(slurp(d / "transcript.jsonl")).size(), 1u);
}

TEST(Cli, RerunIsByteIdentical) {
  auto a = scratch("first"), b = scratch("second");
  ASSERT_EQ(run("elicit --graph survey --expert epsilon:0.3 --seed 17 --method triplet --output " + a.string()), 0);
  ASSERT_EQ(run("rerun " + (a / "manifest.json").string() + " --output " + b.string()), 0);
  for (const char* f : {"report.json", "transcript.jsonl", "final.edges", "pruned_order.txt"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, DiscoverEffectSampleSimulate) {
  auto d = scratch("misc");
  EXPECT_EQ(run("discover --graph asia --true-order --output " + d.string()), 0);
  auto m = json::parse(slurp(d / "metrics.json"));
  EXPECT_EQ(m["shd"], 0);
  EXPECT_EQ(m["dtop"], 0);

  EXPECT_EQ(run("effect --graph cancer --treatment Smoker --target Dyspnoea --samples 20000 --output " + d.string()), 0);
  auto e = json::parse(slurp(d / "effect.json"));
  EXPECT_TRUE(e["valid_backdoor"].get<bool>());
  EXPECT_LT(e["epsilon_ace"].get<double>(), 0.1);

  EXPECT_EQ(run("sample --bn cancer --samples 50 --seed 1 --output " + d.string()), 0);
  std::string csv = slurp(d / "data.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 51);

  EXPECT_EQ(run("simulate prop4 --eps 0.3 --trials 20000 --seed 1 --output " + d.string()), 0);
  auto p = json::parse(slurp(d / "report.json"));
  EXPECT_EQ(p["name"], "prop4");
  EXPECT_EQ(run("export-prior --graph asia --prob 0.8 --output " + d.string()), 0);
  EXPECT_EQ(slurp(d / "prior.txt").rfind("prob 0.8\n", 0), 0u);
}
