#ifndef TOPOAUG_TESTS_HELPERS_HPP
#define TOPOAUG_TESTS_HELPERS_HPP

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "topoaug/volume.hpp"

namespace testutil {

using topoaug::BinaryMask;
using topoaug::Dims;

/// Box [lo, hi] (inclusive) set on a grid of `d`.
inline BinaryMask box(Dims d, std::array<int, 3> lo, std::array<int, 3> hi) {
  BinaryMask m(d);
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) m.at(x, y, z) = 1;
  return m;
}

/// Solid n^3 cube with a one voxel margin.
inline BinaryMask cube(int n) { return box({n + 2, n + 2, n + 2}, {1, 1, 1}, {n, n, n}); }

/// n^3 cube without its centre voxel (odd n).
inline BinaryMask hollow_cube(int n) {
  BinaryMask m = cube(n);
  const int c = 1 + n / 2;
  m.at(c, c, c) = 0;
  return m;
}

/// 3x3x1 ring: a 3x3 square in one slice with the centre unset.
inline BinaryMask ring() {
  BinaryMask m = box({5, 5, 3}, {1, 1, 1}, {3, 3, 1});
  m.at(2, 2, 1) = 0;
  return m;
}

inline std::filesystem::path temp_dir(const std::string &name) {
  std::filesystem::path p = std::filesystem::path(TOPOAUG_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RunResult {
  int exit_code = -1;
  std::string out; ///< stdout
  std::string err; ///< stderr
};

/// Runs the CLI with `args` (already shell-quoted as needed).
inline RunResult run_cli(const std::string &args, const std::filesystem::path &scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + TOPOAUG_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

inline std::string quote(const std::filesystem::path &p) { return "\"" + p.string() + "\""; }

} // namespace testutil

#endif
