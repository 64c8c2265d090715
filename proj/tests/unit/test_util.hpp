#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace modarc::testing {

// Fresh per-test scratch directory under the system temp dir.
// Outside a test body, `fallback` names the directory.
inline std::filesystem::path scratch_dir(const std::string& fallback = "suite") {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const std::string leaf =
      info ? std::string(info->test_suite_name()) + "_" + info->name() : fallback;
  auto dir = std::filesystem::temp_directory_path() / "modarc_tests" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace modarc::testing
