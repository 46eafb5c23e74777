#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/harness.hpp"

namespace rbt {

enum class AdapterRole { kGenerator, kMut };

struct ConformanceOptions {
  AdapterRole role = AdapterRole::kMut;
  std::vector<std::string> inputs = {"input.png"};  // MUT requests
  std::string prompt = "The digit is a 2";           // generator requests
  std::size_t count = 2;
  std::size_t fuzz_rounds = 40;
  std::uint64_t seed = 1;
  std::chrono::milliseconds timeout{10'000};
};

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceReport {
  std::string command;
  std::vector<ConformanceCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

// Drives an adapter through the handshake, valid requests, malformed requests
// (each must yield an error line without ending the session), a seeded random
// interleaving of both, and shutdown on end of input.
ConformanceReport run_conformance(const std::string& command, const ConformanceOptions& opts);

// Malformed request lines used by the tester.
std::vector<std::string> malformed_requests(AdapterRole role);

}  // namespace rbt
