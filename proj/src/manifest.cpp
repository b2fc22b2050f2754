// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "boxrank/error.hpp"

namespace boxrank {

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot hash ", path));
  uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["argv"] = argv;
  j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
  j["seed"] = seed;
  j["threads"] = threads;
  j["kernel_isa"] = kernel_isa;
  j["input_hashes"] = input_hashes;
  j["timings_sec"] = timings_sec;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(msg("cannot write manifest ", path));
  os << j.dump(2) << "\n";
}

void PhaseTimer::start(const std::string& phase) {
  stop();
  current_ = phase;
  begin_ = std::chrono::steady_clock::now();
}

void PhaseTimer::stop() {
  if (current_.empty()) return;
  const auto end = std::chrono::steady_clock::now();
  manifest_.timings_sec[current_] =
      std::chrono::duration<double>(end - begin_).count();
  current_.clear();
}

}  // namespace boxrank
