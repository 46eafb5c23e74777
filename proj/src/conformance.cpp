#include "rbt/conformance.hpp"

#include <functional>
#include <random>

#include <sys/wait.h>

#include "rbt/error.hpp"
#include "rbt/oracle.hpp"
#include "rbt/process.hpp"

namespace rbt {

using nlohmann::json;

bool ConformanceReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

json ConformanceReport::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"command", command}, {"passed", passed()}, {"checks", cs}};
}

std::vector<std::string> malformed_requests(AdapterRole role) {
  std::vector<std::string> common = {"this is not json", "[1,2,3]", "{}", R"({"op":"explode"})", R"({"op":42})",
                                     R"({"op":"infer")"};
  if (role == AdapterRole::kMut) {
    common.push_back(R"({"op":"infer"})");
    common.push_back(R"({"op":"infer","input":5})");
    common.push_back(R"({"op":"generate","prompt":"x","count":1,"seed":1})");
  } else {
    common.push_back(R"({"op":"generate"})");
    common.push_back(R"({"op":"generate","prompt":"x","count":-1,"seed":1})");
    common.push_back(R"({"op":"generate","prompt":"x","count":"two","seed":1})");
    common.push_back(R"({"op":"generate","prompt":7,"count":1,"seed":1})");
    common.push_back(R"({"op":"infer","input":"x.png"})");
  }
  return common;
}

namespace {

struct Session {
  Subprocess proc;
  std::chrono::milliseconds timeout;

  std::optional<std::string> read() { return proc.read_line(timeout); }
};

// Returns an empty string on success, otherwise a description of the problem.
std::string valid_exchange(Session& s, const ConformanceOptions& opts, std::size_t k, std::uint64_t seed) {
  if (opts.role == AdapterRole::kMut) {
    const auto& input = opts.inputs[k % opts.inputs.size()];
    if (!s.proc.write_line(json{{"op", "infer"}, {"input", input}}.dump())) return "adapter closed its input";
    auto line = s.read();
    if (!line) return "adapter exited before responding to infer";
    json doc = json::parse(*line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return "infer response is not a JSON object: " + *line;
    if (doc.contains("error")) return "adapter answered a valid infer with an error: " + *line;
    try {
      ModelOutput::from_json(doc);
    } catch (const Error& e) {
      return std::string("infer response does not match the protocol: ") + e.what();
    }
    return {};
  }
  const std::size_t count = 1 + k % opts.count;
  const json req = {{"op", "generate"}, {"prompt", opts.prompt}, {"count", count}, {"seed", seed}};
  if (!s.proc.write_line(req.dump())) return "adapter closed its input";
  std::size_t paths = 0;
  while (true) {
    auto line = s.read();
    if (!line) return "adapter exited mid-response";
    json doc = json::parse(*line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return "generate response line is not a JSON object: " + *line;
    if (doc.contains("error")) return "adapter answered a valid generate with an error: " + *line;
    if (doc.value("op", "") == "done") break;
    if (!doc.contains("path") || !doc["path"].is_string()) return "generate response line lacks a path: " + *line;
    ++paths;
  }
  if (paths != count) return "expected " + std::to_string(count) + " paths, got " + std::to_string(paths);
  return {};
}

std::string malformed_exchange(Session& s, const std::string& request) {
  if (!s.proc.write_line(request)) return "adapter closed its input";
  auto line = s.read();
  if (!line) return "adapter exited after malformed request " + request;
  json doc = json::parse(*line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("error")) {
    return "expected an error line for " + request + ", got " + *line;
  }
  return {};
}

std::string guarded(const std::function<std::string()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return e.what();
  }
}

}  // namespace

ConformanceReport run_conformance(const std::string& command, const ConformanceOptions& opts) {
  if (opts.role == AdapterRole::kMut && opts.inputs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "MUT conformance needs at least one input");
  }
  if (opts.count < 1) throw Error(ErrorCode::kInvalidArgument, "generator conformance needs count >= 1");
  ConformanceReport report;
  report.command = command;
  auto record = [&](std::string name, const std::string& problem) {
    report.checks.push_back({std::move(name), problem.empty(), problem});
  };
  const std::string_view kind = opts.role == AdapterRole::kMut ? "mut" : "generator";

  Session s{Subprocess(command), opts.timeout};
  const std::string handshake = guarded([&] {
    expect_handshake(s.proc, kind, opts.timeout);
    return std::string();
  });
  record("handshake", handshake);
  if (!handshake.empty()) return report;

  // Once the session breaks, later checks cannot be judged.
  bool alive = true;
  auto step = [&](std::string name, const std::function<std::string()>& fn) {
    if (!alive) {
      record(std::move(name), "skipped: session no longer usable");
      return;
    }
    const std::string problem = guarded(fn);
    if (!problem.empty()) alive = false;
    record(std::move(name), problem);
  };

  step("valid request", [&] { return valid_exchange(s, opts, 0, opts.seed); });
  const auto bad = malformed_requests(opts.role);
  for (std::size_t i = 0; i < bad.size(); ++i) {
    step("malformed request " + std::to_string(i), [&] {
      std::string p = malformed_exchange(s, bad[i]);
      if (!p.empty()) return p;
      p = valid_exchange(s, opts, i + 1, opts.seed + i + 1);
      return p.empty() ? p : "session did not continue after malformed request: " + p;
    });
  }
  step("fuzz interleaving", [&] {
    std::mt19937_64 rng(opts.seed);
    for (std::size_t r = 0; r < opts.fuzz_rounds; ++r) {
      std::string p = rng() % 2 ? valid_exchange(s, opts, r, rng()) : malformed_exchange(s, bad[rng() % bad.size()]);
      if (!p.empty()) return "round " + std::to_string(r) + ": " + p;
    }
    return std::string();
  });

  s.proc.close_stdin();
  auto status = s.proc.wait_for_exit(opts.timeout);
  if (!status) {
    record("exit on end of input", "adapter still running after its input closed");
    s.proc.kill();
  } else {
    record("exit on end of input", WIFEXITED(*status) && WEXITSTATUS(*status) == 0
                                       ? std::string()
                                       : "adapter ended with " + Subprocess::describe_status(*status));
  }
  return report;
}

}  // namespace rbt
