#include "rbt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "rbt/error.hpp"
#include "rbt/text.hpp"
#include <limits>

namespace rbt {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rep_seed(std::uint64_t seed, std::size_t rep) {
  std::uint64_t state = seed;
  std::uint64_t out = 0;
  for (std::size_t i = 0; i <= rep; ++i) out = splitmix64(state);
  return out;
}

namespace {

[[noreturn]] void protocol(const std::string& msg) { throw Error(ErrorCode::kProtocolViolation, msg); }

json parse_line(const std::string& line, const std::string& who) {
  json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) protocol(who + " sent a line that is not a JSON object: " + line);
  if (doc.contains("error")) protocol(who + " reported an error: " + doc["error"].dump());
  return doc;
}

std::string tail(const std::string& s, std::size_t n = 2000) { return s.size() <= n ? s : s.substr(s.size() - n); }

}  // namespace

void expect_handshake(Subprocess& proc, std::string_view kind, std::chrono::milliseconds timeout) {
  auto line = proc.read_line(timeout);
  if (!line) {
    auto status = proc.wait_for_exit(std::chrono::milliseconds(500));
    protocol("adapter '" + proc.command() + "' exited before its handshake" +
             (status ? " (" + Subprocess::describe_status(*status) + ")" : std::string()) +
             (proc.stderr_text().empty() ? "" : "; stderr: " + tail(proc.stderr_text())));
  }
  json doc = json::parse(*line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("protocol", "") != kProtocolVersion ||
      doc.value("kind", "") != kind) {
    protocol("adapter '" + proc.command() + "' sent a bad handshake (expected protocol " + std::string(kProtocolVersion) +
             ", kind " + std::string(kind) + "): " + *line);
  }
}

// Replay ------------------------------------------------------------------

ReplayGenerator::ReplayGenerator(const fs::path& dir) : dir_(dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::kConfig, "replay directory '" + dir.string() + "' not found");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    items_.push_back(entry.path().string());
  }
  std::sort(items_.begin(), items_.end());
  if (items_.empty()) throw Error(ErrorCode::kGeneratorExhausted, "replay directory '" + dir.string() + "' is empty");
}

std::vector<std::string> ReplayGenerator::generate(const std::string&, std::size_t count, std::uint64_t seed) {
  if (count > items_.size()) {
    throw Error(ErrorCode::kGeneratorExhausted, "replay directory '" + dir_.string() + "' holds " +
                                                    std::to_string(items_.size()) + " items, " +
                                                    std::to_string(count) + " requested");
  }
  std::vector<std::string> pool = items_;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with rejection sampling on raw engine output.
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t span = pool.size() - i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    std::swap(pool[i], pool[i + static_cast<std::size_t>(r % span)]);
  }
  pool.resize(count);
  return pool;
}

std::string ReplayGenerator::describe() const { return "replay:" + dir_.string(); }

// Generator process ---------------------------------------------------------

ProcessGenerator::ProcessGenerator(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

std::vector<std::string> ProcessGenerator::generate(const std::string& prompt, std::size_t count, std::uint64_t seed) {
  if (!proc_) {
    proc_ = std::make_unique<Subprocess>(command_);
    try {
      expect_handshake(*proc_, "generator", timeout_);
    } catch (...) {
      proc_.reset();
      throw;
    }
  }
  auto reset_and = [&](ErrorCode code, const std::string& msg) {
    std::string err = proc_ ? tail(proc_->stderr_text()) : std::string();
    proc_.reset();
    throw Error(code, msg + (err.empty() ? "" : "; stderr: " + err));
  };
  const json req = {{"op", "generate"}, {"prompt", prompt}, {"count", count}, {"seed", seed}};
  if (!proc_->write_line(req.dump())) reset_and(ErrorCode::kProtocolViolation, "generator closed its input");

  std::vector<std::string> paths;
  while (true) {
    std::optional<std::string> line;
    try {
      line = proc_->read_line(timeout_);
    } catch (const Error& e) {
      reset_and(e.code(), e.what());
    }
    if (!line) reset_and(ErrorCode::kProtocolViolation, "generator exited mid-response");
    json doc;
    try {
      doc = parse_line(*line, "generator");
    } catch (const Error& e) {
      reset_and(ErrorCode::kProtocolViolation, e.what());
    }
    if (doc.value("op", "") == "done") break;
    auto p = doc.find("path");
    if (p == doc.end() || !p->is_string()) reset_and(ErrorCode::kProtocolViolation, "generator line lacks a path: " + *line);
    paths.push_back(p->get<std::string>());
    if (paths.size() > count) reset_and(ErrorCode::kProtocolViolation, "generator returned more paths than requested");
  }
  if (paths.size() < count) {
    throw Error(ErrorCode::kGeneratorExhausted, "generator returned " + std::to_string(paths.size()) + " of " +
                                                    std::to_string(count) + " requested inputs");
  }
  return paths;
}

// Stub MUT ------------------------------------------------------------------

namespace {

StubModel::Action parse_action(std::string_view text) {
  using Kind = StubModel::Action::Kind;
  StubModel::Action a;
  const std::string s(text);
  if (s == "crash") {
    a.kind = Kind::kCrash;
  } else if (s == "hang") {
    a.kind = Kind::kHang;
  } else if (s.rfind("class:", 0) == 0) {
    a.kind = Kind::kClass;
    a.output = ModelOutput::of_class(s.substr(6));
    if (a.output.label.empty()) throw Error(ErrorCode::kConfig, "stub class action needs a label");
  } else if (s.rfind("reg:", 0) == 0) {
    a.kind = Kind::kRegression;
    std::map<std::string, double> values;
    std::string_view rest = std::string_view(s).substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw Error(ErrorCode::kConfig, "stub regression item '" + std::string(item) + "' lacks '='");
      auto v = text::parse_number(item.substr(eq + 1));
      if (!v) throw Error(ErrorCode::kConfig, "stub regression value '" + std::string(item) + "' is not a number");
      values[std::string(item.substr(0, eq))] = *v;
      rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    }
    if (values.empty()) throw Error(ErrorCode::kConfig, "stub regression action declares no fields");
    a.output = ModelOutput::of_regression(std::move(values));
  } else {
    throw Error(ErrorCode::kConfig, "unknown stub action '" + s + "'");
  }
  return a;
}

}  // namespace

StubModel StubModel::parse(std::string_view rule) {
  StubModel m;
  while (!rule.empty()) {
    const auto semi = rule.find(';');
    std::string_view part = rule.substr(0, semi);
    rule = semi == std::string_view::npos ? std::string_view() : rule.substr(semi + 1);
    if (part.empty()) continue;
    const auto arrow = part.find("->");
    if (arrow == std::string_view::npos) {
      if (m.default_) throw Error(ErrorCode::kConfig, "stub rule has two default actions");
      m.default_ = parse_action(part);
    } else {
      if (arrow == 0) throw Error(ErrorCode::kConfig, "stub rule pattern is empty");
      m.rules_.push_back({std::string(part.substr(0, arrow)), parse_action(part.substr(arrow + 2))});
    }
  }
  if (!m.default_ && m.rules_.empty()) throw Error(ErrorCode::kConfig, "stub rule is empty");
  return m;
}

const StubModel::Action& StubModel::action_for(const std::string& input) const {
  const std::string name = fs::path(input).filename().string();
  for (const auto& r : rules_) {
    if (name.find(r.pattern) != std::string::npos) return r.action;
  }
  if (!default_) throw Error(ErrorCode::kConfig, "stub rule has no action for input '" + input + "'");
  return *default_;
}

ModelOutput StubModel::infer(const std::string& input) {
  const auto& a = action_for(input);
  switch (a.kind) {
    case Action::Kind::kCrash:
      throw Error(ErrorCode::kMutCrashed, "stub crashed on '" + input + "'");
    case Action::Kind::kHang:
      throw Error(ErrorCode::kTimeout, "stub hung on '" + input + "'");
    default:
      return a.output;
  }
}

// MUT process ---------------------------------------------------------------

ProcessModel::ProcessModel(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

void ProcessModel::start() {
  proc_ = std::make_unique<Subprocess>(command_);
  try {
    expect_handshake(*proc_, "mut", timeout_);
  } catch (...) {
    proc_.reset();
    throw;
  }
}

void ProcessModel::prepare() {
  if (!proc_) start();
}

void ProcessModel::fail(ErrorCode code, const std::string& msg) {
  std::string detail = msg;
  if (proc_) {
    if (code == ErrorCode::kMutCrashed) {
      if (auto st = proc_->wait_for_exit(std::chrono::milliseconds(1000))) detail += " (" + Subprocess::describe_status(*st) + ")";
    } else {
      proc_->kill();
    }
    if (!proc_->stderr_text().empty()) detail += "; stderr: " + tail(proc_->stderr_text());
    proc_.reset();
  }
  throw Error(code, detail);
}

ModelOutput ProcessModel::infer(const std::string& input) {
  if (!proc_) start();
  if (!proc_->write_line(json{{"op", "infer"}, {"input", input}}.dump())) {
    fail(ErrorCode::kMutCrashed, "model process closed its input");
  }
  std::optional<std::string> line;
  try {
    line = proc_->read_line(timeout_);
  } catch (const Error& e) {
    fail(e.code(), e.what());
  }
  if (!line) fail(ErrorCode::kMutCrashed, "model process exited while handling '" + input + "'");
  json doc = json::parse(*line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::kProtocolViolation, "model sent a non-object line: " + *line);
  if (doc.contains("error")) throw Error(ErrorCode::kProtocolViolation, "model reported an error: " + doc["error"].dump());
  return ModelOutput::from_json(doc);
}

// Factories -----------------------------------------------------------------

std::unique_ptr<Generator> make_generator(std::string_view spec, std::chrono::milliseconds timeout) {
  if (spec.rfind("replay:", 0) == 0) return std::make_unique<ReplayGenerator>(fs::path(std::string(spec.substr(7))));
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<ProcessGenerator>(std::string(spec.substr(5)), timeout);
  throw Error(ErrorCode::kConfig, "generator must be replay:DIR or exec:CMD, got '" + std::string(spec) + "'");
}

ModelFactory make_model_factory(std::string_view spec, std::chrono::milliseconds timeout) {
  if (spec.rfind("stub:", 0) == 0) {
    auto stub = std::make_shared<StubModel>(StubModel::parse(spec.substr(5)));
    return [stub] { return std::make_unique<StubModel>(*stub); };
  }
  if (spec.rfind("exec:", 0) == 0) {
    std::string cmd(spec.substr(5));
    return [cmd, timeout] { return std::make_unique<ProcessModel>(cmd, timeout); };
  }
  throw Error(ErrorCode::kConfig, "model must be stub:RULE or exec:CMD, got '" + std::string(spec) + "'");
}

// Reports -------------------------------------------------------------------

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::kOracle: return "oracle";
    case FailureReason::kMutCrashed: return "mut_crashed";
    case FailureReason::kTimeout: return "timeout";
    case FailureReason::kProtocolViolation: return "protocol_violation";
    case FailureReason::kSchemaMismatch: return "schema_mismatch";
  }
  return "oracle";
}

namespace {

FailureReason parse_reason(const std::string& s) {
  for (auto r : {FailureReason::kOracle, FailureReason::kMutCrashed, FailureReason::kTimeout,
                 FailureReason::kProtocolViolation, FailureReason::kSchemaMismatch}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::kMalformedFile, "unknown failure reason '" + s + "'");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void RunReport::summarize() {
  if (reps.empty()) {
    mean_pass_rate = std_pass_rate = 0.0;
    return;
  }
  std::size_t passes = 0, total = 0;
  for (const auto& r : reps) passes += r.passes, total += r.n;
  mean_pass_rate = total ? static_cast<double>(passes) / static_cast<double>(total) : 0.0;
  double ss = 0.0;
  for (const auto& r : reps) ss += (r.pass_rate() - mean_pass_rate) * (r.pass_rate() - mean_pass_rate);
  std_pass_rate = std::sqrt(ss / static_cast<double>(reps.size()));
}

json RunReport::to_json() const {
  json rs = json::array();
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    json fails = json::array();
    for (const auto& f : r.failures) {
      fails.push_back({{"input", f.input},
                       {"reason", to_string(f.reason)},
                       {"output", f.output ? f.output->to_json() : json(nullptr)},
                       {"detail", f.detail}});
    }
    rs.push_back({{"rep", i}, {"seed", r.seed}, {"n", r.n}, {"passes", r.passes}, {"pass_rate", r.pass_rate()},
                  {"failures", fails}});
  }
  return {{"requirement", requirement_id}, {"prompt", prompt},   {"generator", generator},
          {"seed", seed},                  {"reps", rs},         {"mean_pass_rate", mean_pass_rate},
          {"std_pass_rate", std_pass_rate}, {"pmp", optional_number(pmp)}, {"fp_estimate", optional_number(fp_estimate)}};
}

RunReport RunReport::from_json(const json& doc) {
  RunReport r;
  try {
    r.requirement_id = doc.at("requirement").get<std::string>();
    r.prompt = doc.value("prompt", "");
    r.generator = doc.value("generator", "");
    r.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& rep : doc.at("reps")) {
      RepResult rr;
      rr.seed = rep.value("seed", std::uint64_t{0});
      rr.n = rep.at("n").get<std::size_t>();
      rr.passes = rep.at("passes").get<std::size_t>();
      for (const auto& f : rep.at("failures")) {
        TestFailure tf;
        tf.input = f.at("input").get<std::string>();
        tf.reason = parse_reason(f.at("reason").get<std::string>());
        if (f.contains("output") && !f["output"].is_null()) tf.output = ModelOutput::from_json(f["output"]);
        tf.detail = f.value("detail", "");
        rr.failures.push_back(std::move(tf));
      }
      if (rr.passes > rr.n || rr.passes + rr.failures.size() != rr.n) {
        throw Error(ErrorCode::kMalformedFile, "report rep counts are inconsistent");
      }
      r.reps.push_back(std::move(rr));
    }
    if (doc.contains("pmp") && !doc["pmp"].is_null()) r.pmp = doc["pmp"].get<double>();
    if (doc.contains("fp_estimate") && !doc["fp_estimate"].is_null()) r.fp_estimate = doc["fp_estimate"].get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("run report: ") + e.what());
  }
  r.summarize();
  return r;
}

// Campaign ------------------------------------------------------------------

namespace {

struct Outcome {
  bool pass = false;
  TestFailure failure;
};

Outcome run_test(ModelUnderTest& model, const std::string& input, const Glossary& g, const TermFormula& post,
                 const OutputSchema& schema, const Taxonomy* taxonomy) {
  Outcome o;
  o.failure.input = input;
  try {
    ModelOutput out = model.infer(input);
    validate_output(schema, out);
    o.failure.output = out;
    o.pass = check_postcondition(g, post, out, schema, taxonomy);
    if (!o.pass) o.failure.reason = FailureReason::kOracle;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kMutCrashed: o.failure.reason = FailureReason::kMutCrashed; break;
      case ErrorCode::kTimeout: o.failure.reason = FailureReason::kTimeout; break;
      case ErrorCode::kProtocolViolation: o.failure.reason = FailureReason::kProtocolViolation; break;
      case ErrorCode::kSchemaMismatch: o.failure.reason = FailureReason::kSchemaMismatch; break;
      default: throw;
    }
    o.failure.detail = e.what();
  }
  return o;
}

}  // namespace

RunReport run_campaign(const Glossary& g, const snl::Requirement& req, Generator& gen, const ModelFactory& mut,
                       const OutputSchema& schema, const Taxonomy* taxonomy, const CampaignOptions& opts) {
  if (opts.n < 1 || opts.reps < 1) throw Error(ErrorCode::kInvalidArgument, "campaign needs n >= 1 and reps >= 1");
  RunReport report;
  report.requirement_id = req.id;
  report.seed = opts.seed;
  report.generator = gen.describe();
  const std::string rendered = snl::render_precondition(g, req.precondition);
  report.prompt = opts.trigger.empty() ? rendered : opts.trigger + " " + rendered;

  const std::size_t workers = std::clamp<std::size_t>(opts.workers, 1, opts.n);
  std::vector<std::unique_ptr<ModelUnderTest>> models;
  for (std::size_t w = 0; w < workers; ++w) {
    models.push_back(mut());
    models.back()->prepare();
  }

  for (std::size_t rep = 0; rep < opts.reps; ++rep) {
    RepResult rr;
    rr.seed = rep_seed(opts.seed, rep);
    const auto inputs = gen.generate(report.prompt, opts.n, rr.seed);
    if (inputs.size() != opts.n) {
      throw Error(ErrorCode::kGeneratorExhausted, "generator returned " + std::to_string(inputs.size()) + " inputs");
    }
    std::vector<Outcome> outcomes(inputs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto work = [&](ModelUnderTest& model) {
      for (std::size_t i = next++; i < inputs.size(); i = next++) {
        try {
          outcomes[i] = run_test(model, inputs[i], g, req.postcondition, schema, taxonomy);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          next = inputs.size();
        }
      }
    };
    if (workers == 1) {
      work(*models.front());
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, std::ref(*models[w]));
      for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    rr.n = inputs.size();
    for (auto& o : outcomes) {
      if (o.pass) {
        ++rr.passes;
      } else {
        rr.failures.push_back(std::move(o.failure));
      }
    }
    spdlog::debug("{} rep {}: {}/{} passed", req.id, rep, rr.passes, rr.n);
    report.reps.push_back(std::move(rr));
  }
  report.summarize();
  return report;
}

double estimate_false_positives(double ptp, double pmp) {
  if (!(pmp >= 0.0 && pmp <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "pmp must lie in [0,1]");
  if (!(ptp >= 0.0 && ptp <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "ptp must lie in [0,1]");
  return (1.0 - pmp) * (1.0 - ptp);
}

double estimate_false_positives(const RunReport& report, double pmp) {
  return estimate_false_positives(report.mean_pass_rate, pmp);
}

void attach_false_positive_estimate(RunReport& report, double pmp) {
  report.fp_estimate = estimate_false_positives(report, pmp);
  report.pmp = pmp;
}

}  // namespace rbt
