#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/error.hpp"
#include "rbt/glossary.hpp"
#include "rbt/oracle.hpp"
#include "rbt/process.hpp"
#include "rbt/snl.hpp"
#include "rbt/taxonomy.hpp"

namespace rbt {

inline constexpr std::string_view kProtocolVersion = "rbt/1";
inline constexpr std::chrono::milliseconds kDefaultCallTimeout{60'000};

// splitmix64 step; rep r of a campaign with seed s uses the (r+1)-th output
// of the stream started at s.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t rep_seed(std::uint64_t seed, std::size_t rep);

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<std::string> generate(const std::string& prompt, std::size_t count, std::uint64_t seed) = 0;
  virtual std::string describe() const = 0;
};

// Samples without replacement from the regular, non-hidden files of a
// directory (name order, then a seeded Fisher-Yates shuffle).
class ReplayGenerator : public Generator {
 public:
  explicit ReplayGenerator(const std::filesystem::path& dir);
  std::vector<std::string> generate(const std::string& prompt, std::size_t count, std::uint64_t seed) override;
  std::string describe() const override;
  const std::vector<std::string>& items() const noexcept { return items_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> items_;
};

// Speaks the generator protocol with an external adapter process.
class ProcessGenerator : public Generator {
 public:
  explicit ProcessGenerator(std::string command, std::chrono::milliseconds timeout = kDefaultCallTimeout);
  std::vector<std::string> generate(const std::string& prompt, std::size_t count, std::uint64_t seed) override;
  std::string describe() const override { return "exec:" + command_; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Subprocess> proc_;
};

class ModelUnderTest {
 public:
  virtual ~ModelUnderTest() = default;
  // Start-up work whose failure should abort a campaign (handshakes).
  virtual void prepare() {}
  // Throws MutCrashed, Timeout, ProtocolViolation or SchemaMismatch.
  virtual ModelOutput infer(const std::string& input) = 0;
};

using ModelFactory = std::function<std::unique_ptr<ModelUnderTest>()>;

// Builtin stub: "ACTION(;PATTERN->ACTION)*". The first rule whose pattern is a
// substring of the input's file name applies, else the bare default action.
// Actions: class:LABEL, reg:FIELD=V,..., crash, hang.
class StubModel : public ModelUnderTest {
 public:
  struct Action {
    enum class Kind { kClass, kRegression, kCrash, kHang } kind = Kind::kClass;
    ModelOutput output;
  };
  struct Rule {
    std::string pattern;  // empty for the default
    Action action;
  };

  static StubModel parse(std::string_view rule);
  const Action& action_for(const std::string& input) const;
  ModelOutput infer(const std::string& input) override;

 private:
  std::vector<Rule> rules_;
  std::optional<Action> default_;
};

// Speaks the MUT protocol with one external adapter process, restarting it
// after crashes and timeouts.
class ProcessModel : public ModelUnderTest {
 public:
  explicit ProcessModel(std::string command, std::chrono::milliseconds timeout = kDefaultCallTimeout);
  void prepare() override;
  ModelOutput infer(const std::string& input) override;

 private:
  void start();
  [[noreturn]] void fail(ErrorCode code, const std::string& msg);

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Subprocess> proc_;
};

// Reads and validates the handshake line of a freshly started adapter.
void expect_handshake(Subprocess& proc, std::string_view kind, std::chrono::milliseconds timeout);

// "replay:DIR" or "exec:CMD".
std::unique_ptr<Generator> make_generator(std::string_view spec, std::chrono::milliseconds timeout = kDefaultCallTimeout);
// "stub:RULE" or "exec:CMD"; each call of the factory yields an independent model.
ModelFactory make_model_factory(std::string_view spec, std::chrono::milliseconds timeout = kDefaultCallTimeout);

enum class FailureReason { kOracle, kMutCrashed, kTimeout, kProtocolViolation, kSchemaMismatch };
std::string_view to_string(FailureReason r);

struct TestFailure {
  std::string input;
  FailureReason reason = FailureReason::kOracle;
  std::optional<ModelOutput> output;
  std::string detail;
};

struct RepResult {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t passes = 0;
  std::vector<TestFailure> failures;  // test order

  double pass_rate() const { return n ? static_cast<double>(passes) / static_cast<double>(n) : 0.0; }
};

struct RunReport {
  std::string requirement_id;
  std::string prompt;
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<RepResult> reps;
  double mean_pass_rate = 0.0;
  double std_pass_rate = 0.0;  // population standard deviation over reps
  std::optional<double> pmp;
  std::optional<double> fp_estimate;

  // Recomputes mean/std from reps.
  void summarize();
  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& doc);
};

struct CampaignOptions {
  std::size_t n = 1000;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string trigger;  // prefixed to the rendered precondition in prompts
};

RunReport run_campaign(const Glossary& g, const snl::Requirement& req, Generator& gen, const ModelFactory& mut,
                       const OutputSchema& schema, const Taxonomy* taxonomy, const CampaignOptions& opts);

// (1 - pmp) * (1 - ptp).
double estimate_false_positives(double ptp, double pmp);
double estimate_false_positives(const RunReport& report, double pmp);
void attach_false_positive_estimate(RunReport& report, double pmp);

}  // namespace rbt
