#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "stepfill/error.hpp"

#define CHECK_ERRC(expr, errc)                                  \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const stepfill::Error& e_) {                       \
      thrown_ = true;                                           \
      CHECK_MESSAGE(e_.code() == (errc), std::string(e_.what()));            \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected stepfill::Error: " #expr); \
  } while (0)

namespace test_support {

// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("stepfill-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return std::filesystem::path(STEPFILL_TEST_DATA_DIR); }

}  // namespace test_support
