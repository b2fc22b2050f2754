// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace boxrank {

// Reproducibility record emitted by every CLI run: the resolved
// configuration, seeds, input-file hashes and per-phase wall-clock. Re-runs
// with the same manifest (and threads=1) reproduce outputs byte for byte;
// the manifest itself carries the only nondeterministic fields (timings).
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::vector<std::string> argv;
  std::string config_json;  // resolved config, serialized
  uint64_t seed = 0;
  int threads = 1;
  std::string kernel_isa;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex
  std::map<std::string, double> timings_sec;

  void write(const std::string& path) const;
};

uint64_t fnv1a_file(const std::string& path);
std::string hash_hex(uint64_t h);

class PhaseTimer {
 public:
  explicit PhaseTimer(RunManifest& manifest) : manifest_(manifest) {}

  void start(const std::string& phase);
  void stop();

 private:
  RunManifest& manifest_;
  std::string current_;
  std::chrono::steady_clock::time_point begin_;
};

}  // namespace boxrank
