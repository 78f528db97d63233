#include "test_util.hpp"

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

namespace testutil {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("repacc-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path toy_dir() { return fs::path(REPACC_TEST_DATA_DIR) / "toy"; }

std::string tree_bytes(const fs::path& root) {
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.insert(e.path());
  std::string out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out += fs::relative(f, root).string() + "\n" + ss.str() + "\n";
  }
  return out;
}

}  // namespace testutil
