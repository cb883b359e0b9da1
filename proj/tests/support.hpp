#pragma once

#include "decodekit/labeled_matrix.hpp"
#include "decodekit/random.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <string>
#include <vector>

namespace dk_test {

using decodekit::Matrix;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::string_view tag = "gaussian") {
  const decodekit::CounterRng rng(decodekit::derive_key(seed, {"test", tag}));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(static_cast<std::uint64_t>(r * cols + c));
  return m;
}

inline double uniform(std::uint64_t seed, std::uint64_t index, std::string_view tag = "uniform") {
  return decodekit::CounterRng(decodekit::derive_key(seed, {"test", tag})).uniform(index);
}

inline std::vector<std::string> ids(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline decodekit::LabeledMatrix labeled(const Matrix& m, const std::string& prefix = "s") {
  return decodekit::LabeledMatrix(ids(static_cast<std::size_t>(m.rows()), prefix), m);
}

struct RankCase {
  Eigen::VectorXd prediction;
  Matrix candidates;
  Eigen::Index true_index = 0;
};

/// Random ranking problem with n <= 50 candidates. Roughly half the cases
/// contain exact ties: candidates duplicated or rescaled by powers of two,
/// one-dimensional candidates, or a fully repeated candidate set.
inline RankCase rank_case(std::uint64_t seed) {
  decodekit::CounterStream s(decodekit::derive_key(seed, {"test", "rank_case"}));
  const auto n = static_cast<Eigen::Index>(2 + s.below(49));
  const auto kind = s.below(4);
  const auto d = static_cast<Eigen::Index>(kind == 1 ? 1 : 1 + s.below(8));
  RankCase c;
  c.candidates = gaussian(n, d, seed, "rank_candidates");
  if (kind == 2) {
    for (Eigen::Index k = 0; k < n / 2; ++k) {
      const auto from = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(n)));
      const auto to = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(n)));
      c.candidates.row(to) = std::ldexp(1.0, static_cast<int>(s.below(5)) - 2) * c.candidates.row(from);
    }
  } else if (kind == 3 && s.below(4) == 0) {
    c.candidates.rowwise() = c.candidates.row(0);
  }
  c.true_index = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(n)));
  if (s.below(4) == 0) {
    c.prediction = 0.5 * c.candidates.row(static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(n)))).transpose();
  } else {
    c.prediction = gaussian(d, 1, seed, "rank_prediction");
  }
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
      path_ = base / ("decodekit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
      if (std::filesystem::create_directories(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace dk_test
