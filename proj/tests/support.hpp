#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "a2p2/session.hpp"

namespace a2p2::testing {

inline std::filesystem::path data_dir() { return A2P2_DEFAULT_DATA_DIR; }

inline std::shared_ptr<const session::Resources> shipped() {
  static const auto res = session::Resources::load(session::ResourcePaths::defaults());
  return res;
}

inline Timestamp at(const char* iso) { return parse_iso8601(iso); }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() / ("a2p2_" + tag + "_" + std::to_string(rd()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace a2p2::testing
