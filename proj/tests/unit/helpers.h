#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cdawgscan/corpus.h"

namespace cdawgscan::testing {

inline std::vector<TokenId> bytes(std::string_view s) {
  return {s.begin(), s.end()};
}

// hello$world$ over byte tokens.
inline Corpus hello_world() {
  return Corpus::from_documents({bytes("hello"), bytes("world")}, '$', 256);
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("cdawgscan_unit_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cdawgscan::testing
