#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <catch_amalgamated.hpp>

#include "igtk/error.hpp"

// Asserts that `expr` throws igtk::Error of the given kind.
#define REQUIRE_ERROR_KIND(expr, expected_kind)                         \
  do {                                                                  \
    bool igtk_thrown_ = false;                                          \
    try {                                                               \
      (void)(expr);                                                     \
    } catch (const igtk::Error& e) {                                    \
      igtk_thrown_ = true;                                              \
      INFO("message: " << e.what());                                    \
      REQUIRE(e.kind() == (expected_kind));                             \
    }                                                                   \
    REQUIRE(igtk_thrown_);                                              \
  } while (0)

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("igtk-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};
