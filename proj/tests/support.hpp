#pragma once

#include "dnnr/common.hpp"
#include "dnnr/nnindex.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace testing {

using dnnr::Index;
using dnnr::Matrix;
using dnnr::Rng;
using dnnr::Vector;

inline Matrix uniform_matrix(Rng& rng, Index n, Index d, double lo = 0.0, double hi = 1.0) {
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Vector uniform_vector(Rng& rng, Index d, double lo = 0.0, double hi = 1.0) {
  Vector v(d);
  for (Index j = 0; j < d; ++j) v(j) = lo + (hi - lo) * rng.uniform();
  return v;
}

inline Index uniform_int(Rng& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Exhaustive scan with ties broken by the lower row id.
inline std::vector<Index> brute_force(const Matrix& x, const Vector& w, const Vector& q, Index k,
                                      const std::vector<Index>& exclude = {}) {
  std::vector<std::pair<double, Index>> all;
  for (Index i = 0; i < x.rows(); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
    double s = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      const double t = w(j) * x(i, j) - w(j) * q(j);
      s += t * t;
    }
    all.emplace_back(s, i);
  }
  std::sort(all.begin(), all.end());
  std::vector<Index> out;
  for (Index i = 0; i < k; ++i) out.push_back(all[static_cast<std::size_t>(i)].second);
  return out;
}

inline std::vector<Index> iota_rows(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

class TempFile {
public:
  explicit TempFile(const std::string& name, const std::string& content = "")
      : path_(std::filesystem::temp_directory_path() / ("dnnr_test_" + name)) {
    if (!content.empty()) std::ofstream(path_) << content;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace testing
