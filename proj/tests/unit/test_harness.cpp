#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "../support/fixtures.hpp"
#include "rbt/conformance.hpp"
#include "rbt/error.hpp"
#include "rbt/harness.hpp"
#include "rbt/snl.hpp"

namespace rbt {
namespace {

namespace fs = std::filesystem;
using testing::fixture;
using testing::glossary;
using namespace std::chrono_literals;

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string adapter(const std::string& role, const std::string& arg, const std::string& flags = "") {
  return quote(RBT_STUB_ADAPTER) + " " + role + " " + quote(arg) + (flags.empty() ? "" : " " + flags);
}

// Directory with `good` plain inputs and `bad` inputs whose names contain "bad".
class ReplayDir {
 public:
  ReplayDir(const std::string& tag, int good, int bad) : path_(fs::temp_directory_path() / ("rbt_harness_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
    for (int i = 0; i < good; ++i) touch("img" + std::to_string(i) + ".png");
    for (int i = 0; i < bad; ++i) touch("bad" + std::to_string(i) + ".png");
    touch(".hidden");
  }
  ~ReplayDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  void touch(const std::string& name) { std::ofstream(path_ / name) << name; }
  fs::path path_;
};

const snl::Requirement& mnist_m1() {
  static const auto reqs = snl::load_requirements(glossary("mnist"), fixture("mnist/requirements.json"));
  return snl::find_requirement(reqs, "M1");
}

const OutputSchema& class_schema() {
  static const OutputSchema s = OutputSchema::parse(R"({"kind":"class","labels":null})");
  return s;
}

RunReport campaign(Generator& gen, const std::string& mut_spec, std::size_t n, std::size_t reps, std::uint64_t seed = 7,
                   std::size_t workers = 1, std::chrono::milliseconds timeout = 10s) {
  CampaignOptions opts;
  opts.n = n;
  opts.reps = reps;
  opts.seed = seed;
  opts.workers = workers;
  return run_campaign(glossary("mnist"), mnist_m1(), gen, make_model_factory(mut_spec, timeout), class_schema(),
                      nullptr, opts);
}

TEST(Seeds, SplitMix64ReferenceValues) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(state), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rep_seed(0, 0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rep_seed(0, 1), 0x6e789e6aa1b965f4ULL);
}

TEST(Replay, SamplesWithoutReplacement) {
  ReplayDir dir("sampling", 15, 5);
  ReplayGenerator gen(dir.path());
  EXPECT_EQ(gen.items().size(), 20u);
  auto a = gen.generate("p", 12, 1);
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), 12u);
  for (const auto& p : a) EXPECT_TRUE(fs::exists(p));
  EXPECT_EQ(gen.generate("p", 12, 1), a);
  EXPECT_NE(gen.generate("p", 12, 2), a);
  auto all = gen.generate("p", 20, 3);
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()), std::set<std::string>(gen.items().begin(), gen.items().end()));
  try {
    gen.generate("p", 21, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeneratorExhausted);
  }
}

TEST(Replay, MissingOrEmptyDirectory) {
  EXPECT_THROW(ReplayGenerator("/nonexistent/rbt"), Error);
  ReplayDir dir("empty", 0, 0);
  try {
    ReplayGenerator g(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeneratorExhausted);
  }
}

TEST(Stub, RuleParsing) {
  auto m = StubModel::parse("class:2;bad->class:3");
  EXPECT_EQ(m.infer("/x/img.png"), ModelOutput::of_class("2"));
  EXPECT_EQ(m.infer("/x/bad1.png"), ModelOutput::of_class("3"));
  EXPECT_EQ(m.infer("/bad/img.png"), ModelOutput::of_class("2"));
  auto r = StubModel::parse("reg:accel=0.5,steer=0");
  EXPECT_EQ(r.infer("a"), ModelOutput::of_regression({{"accel", 0.5}, {"steer", 0.0}}));
  for (const char* bad : {"", "bogus", "class:", "reg:", "reg:accel=x", "class:1;class:2", "->class:1"}) {
    EXPECT_THROW(StubModel::parse(bad), Error) << bad;
  }
  auto only = StubModel::parse("bad->crash");
  EXPECT_THROW(only.infer("good.png"), Error);
  try {
    only.infer("bad.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMutCrashed);
  }
}

TEST(Campaign, CountedFixture) {
  ReplayDir dir("counted", 7, 3);
  ReplayGenerator gen(dir.path());
  auto one = campaign(gen, "stub:class:2;bad->class:3", 10, 1);
  ASSERT_EQ(one.reps.size(), 1u);
  EXPECT_EQ(one.reps[0].passes, 7u);
  EXPECT_EQ(one.mean_pass_rate, 0.7);
  auto five = campaign(gen, "stub:class:2;bad->class:3", 10, 5);
  EXPECT_EQ(five.mean_pass_rate, 0.7);
  EXPECT_EQ(five.std_pass_rate, 0.0);
  for (const auto& rep : five.reps) {
    EXPECT_EQ(rep.passes + rep.failures.size(), rep.n);
    for (const auto& f : rep.failures) {
      EXPECT_NE(fs::path(f.input).filename().string().find("bad"), std::string::npos);
      EXPECT_EQ(f.reason, FailureReason::kOracle);
      EXPECT_EQ(f.output, ModelOutput::of_class("3"));
    }
  }
  EXPECT_EQ(five.prompt, "The digit is a 2 and has very low height");
}

TEST(Campaign, AlwaysPassAndStd) {
  ReplayDir dir("std", 10, 10);
  ReplayGenerator gen(dir.path());
  EXPECT_EQ(campaign(gen, "stub:class:2", 5, 4).mean_pass_rate, 1.0);
  auto r = campaign(gen, "stub:class:2;bad->class:3", 5, 6, 11);
  std::vector<double> rates;
  for (const auto& rep : r.reps) rates.push_back(rep.pass_rate());
  double mean = 0;
  for (double v : rates) mean += v / rates.size();
  double var = 0;
  for (double v : rates) var += (v - mean) * (v - mean) / rates.size();
  EXPECT_NEAR(r.mean_pass_rate, mean, 1e-12);
  EXPECT_NEAR(r.std_pass_rate, std::sqrt(var), 1e-12);
}

TEST(Campaign, SeedDeterminismAndWorkers) {
  ReplayDir dir("determinism", 30, 10);
  ReplayGenerator gen(dir.path());
  auto a = campaign(gen, "stub:class:2;bad->class:3", 12, 3, 42).to_json().dump();
  auto b = campaign(gen, "stub:class:2;bad->class:3", 12, 3, 42).to_json().dump();
  auto c = campaign(gen, "stub:class:2;bad->class:3", 12, 3, 42, 4).to_json().dump();
  auto d = campaign(gen, "stub:class:2;bad->class:3", 12, 3, 43).to_json().dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_NE(a, d);
}

TEST(Campaign, CrashAndHangAreFailures) {
  ReplayDir dir("crash", 7, 3);
  ReplayGenerator gen(dir.path());
  auto r = campaign(gen, "stub:class:2;bad->crash", 10, 2);
  EXPECT_EQ(r.mean_pass_rate, 0.7);
  for (const auto& rep : r.reps) {
    ASSERT_EQ(rep.failures.size(), 3u);
    for (const auto& f : rep.failures) {
      EXPECT_EQ(f.reason, FailureReason::kMutCrashed);
      EXPECT_FALSE(f.output);
    }
  }
  auto h = campaign(gen, "stub:class:2;bad->hang", 10, 1);
  for (const auto& f : h.reps[0].failures) EXPECT_EQ(f.reason, FailureReason::kTimeout);
}

TEST(Campaign, SchemaMismatchIsFailure) {
  ReplayDir dir("schema", 2, 0);
  ReplayGenerator gen(dir.path());
  auto r = campaign(gen, "stub:reg:accel=1", 2, 1);
  ASSERT_EQ(r.reps[0].failures.size(), 2u);
  EXPECT_EQ(r.reps[0].failures[0].reason, FailureReason::kSchemaMismatch);
}

TEST(Campaign, ArgumentErrors) {
  ReplayDir dir("args", 3, 0);
  ReplayGenerator gen(dir.path());
  EXPECT_THROW(campaign(gen, "stub:class:2", 0, 1), Error);
  EXPECT_THROW(campaign(gen, "stub:class:2", 1, 0), Error);
  try {
    campaign(gen, "stub:class:2", 4, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeneratorExhausted);
  }
  EXPECT_THROW(make_model_factory("torch:model.pt"), Error);
  EXPECT_THROW(make_generator("http://x"), Error);
}

TEST(Campaign, ThousandByTenRunsQuickly) {
  ReplayDir dir("shape", 900, 100);
  ReplayGenerator gen(dir.path());
  const auto start = std::chrono::steady_clock::now();
  auto r = campaign(gen, "stub:class:2;bad->class:3", 1000, 10, 1, 2);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 60s);
  EXPECT_EQ(r.reps.size(), 10u);
  EXPECT_EQ(r.mean_pass_rate, 0.9);
}

TEST(Report, JsonRoundTrip) {
  ReplayDir dir("report", 7, 3);
  ReplayGenerator gen(dir.path());
  auto r = campaign(gen, "stub:class:2;bad->class:3", 10, 3);
  attach_false_positive_estimate(r, 0.9);
  auto back = RunReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  auto doc = r.to_json();
  doc["reps"][0]["passes"] = 99;
  EXPECT_THROW(RunReport::from_json(doc), Error);
}

TEST(FalsePositives, Formula) {
  EXPECT_EQ(estimate_false_positives(0.3, 1.0), 0.0);
  EXPECT_NEAR(estimate_false_positives(0.8, 0.9), 0.02, 1e-15);
  EXPECT_THROW(estimate_false_positives(0.5, 1.5), Error);
  EXPECT_THROW(estimate_false_positives(0.5, -0.1), Error);
}

// External processes -------------------------------------------------------

TEST(ProcessMut, MatchesBuiltinStub) {
  ReplayDir dir("proc_match", 7, 3);
  ReplayGenerator gen(dir.path());
  const std::string rule = "class:2;bad->class:3";
  auto builtin = campaign(gen, "stub:" + rule, 10, 2);
  auto external = campaign(gen, "exec:" + adapter("mut", rule), 10, 2, 7, 2);
  EXPECT_EQ(external.to_json(), builtin.to_json());
}

TEST(ProcessMut, CrashRestartsAdapter) {
  ReplayDir dir("proc_crash", 7, 3);
  ReplayGenerator gen(dir.path());
  auto r = campaign(gen, "exec:" + adapter("mut", "class:2;bad->crash"), 10, 1);
  EXPECT_EQ(r.reps[0].passes, 7u);
  ASSERT_EQ(r.reps[0].failures.size(), 3u);
  for (const auto& f : r.reps[0].failures) {
    EXPECT_EQ(f.reason, FailureReason::kMutCrashed);
    EXPECT_NE(f.detail.find("crashing on"), std::string::npos) << f.detail;
  }
}

TEST(ProcessMut, TimeoutKillsAndRestarts) {
  ReplayDir dir("proc_hang", 3, 1);
  ReplayGenerator gen(dir.path());
  auto r = campaign(gen, "exec:" + adapter("mut", "class:2;bad->hang"), 4, 1, 7, 1, 300ms);
  EXPECT_EQ(r.reps[0].passes, 3u);
  ASSERT_EQ(r.reps[0].failures.size(), 1u);
  EXPECT_EQ(r.reps[0].failures[0].reason, FailureReason::kTimeout);
}

TEST(ProcessMut, BadHandshakeAbortsCampaign) {
  ReplayDir dir("proc_handshake", 3, 0);
  ReplayGenerator gen(dir.path());
  try {
    campaign(gen, "exec:" + adapter("mut", "class:2", "--bad-handshake"), 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocolViolation);
  }
  EXPECT_THROW(campaign(gen, "exec:/nonexistent/adapter", 3, 1), Error);
}

TEST(ProcessGenerator, MatchesReplay) {
  ReplayDir dir("proc_gen", 7, 3);
  ReplayGenerator replay(dir.path());
  ProcessGenerator proc(adapter("generator", dir.path().string()));
  for (std::uint64_t seed : {1u, 2u, 3u}) EXPECT_EQ(proc.generate("p", 6, seed), replay.generate("p", 6, seed));
  auto r = campaign(proc, "stub:class:2;bad->class:3", 10, 2);
  EXPECT_EQ(r.mean_pass_rate, 0.7);
  try {
    proc.generate("p", 11, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeneratorExhausted);
  }
  EXPECT_EQ(proc.generate("p", 2, 9).size(), 2u);
}

TEST(ProcessGenerator, ExitMidSession) {
  ReplayDir dir("proc_gen_die", 4, 0);
  ProcessGenerator proc(adapter("generator", dir.path().string(), "--die-after 1"));
  EXPECT_EQ(proc.generate("p", 2, 1).size(), 2u);
  try {
    proc.generate("p", 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocolViolation);
  }
}

// Conformance tester -------------------------------------------------------

TEST(Conformance, StubAdaptersPass) {
  ReplayDir dir("conf", 4, 1);
  ConformanceOptions mut;
  mut.role = AdapterRole::kMut;
  mut.inputs = {"a.png", "bad.png"};
  auto m = run_conformance(adapter("mut", "class:2;bad->class:3"), mut);
  EXPECT_TRUE(m.passed()) << m.to_json().dump(2);
  EXPECT_GT(m.checks.size(), 5u);

  ConformanceOptions gen;
  gen.role = AdapterRole::kGenerator;
  gen.count = 3;
  auto g = run_conformance(adapter("generator", dir.path().string()), gen);
  EXPECT_TRUE(g.passed()) << g.to_json().dump(2);
}

TEST(Conformance, DetectsMisbehaviour) {
  ConformanceOptions opts;
  opts.timeout = 300ms;
  opts.fuzz_rounds = 5;
  auto handshake = run_conformance(adapter("mut", "class:2", "--bad-handshake"), opts);
  EXPECT_FALSE(handshake.passed());
  EXPECT_EQ(handshake.checks.front().name, "handshake");
  EXPECT_FALSE(handshake.checks.front().passed);

  auto silent = run_conformance(adapter("mut", "class:2", "--silent-errors"), opts);
  EXPECT_FALSE(silent.passed());
  EXPECT_TRUE(silent.checks[1].passed);
  EXPECT_FALSE(silent.checks[2].passed);

  auto dies = run_conformance(adapter("mut", "class:2", "--die-after 3"), opts);
  EXPECT_FALSE(dies.passed());

  auto wrong_role = run_conformance(adapter("mut", "class:2"), ConformanceOptions{.role = AdapterRole::kGenerator,
                                                                                  .timeout = 300ms});
  EXPECT_FALSE(wrong_role.passed());
}

}  // namespace
}  // namespace rbt
