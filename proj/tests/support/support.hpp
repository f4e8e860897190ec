#pragma once

// Shared helpers for the test binaries: scratch directories, log capture and
// brute-force reference implementations the production code is checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "malens/error.hpp"
#include "malens/interchange.hpp"
#include "malens/log.hpp"
#include "malens/rng.hpp"

namespace malens::testing {

/// Code of the malens::Error thrown by f, or empty when it returns normally.
template <typename F>
std::optional<Errc> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    Rng rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("malens-test-" + std::to_string(rng.next() % 1000000007) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Collects log lines for the lifetime of the object.
class LogCapture {
 public:
  LogCapture() {
    previous_ = log::set_sink([this](log::Level level, std::string_view message) {
      std::lock_guard lock(mutex_);
      lines_.emplace_back(level, std::string(message));
    });
  }
  ~LogCapture() { log::set_sink(std::move(previous_)); }

  std::size_t count(log::Level level) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(
        lines_.begin(), lines_.end(), [level](const auto& l) { return l.first == level; }));
  }
  bool contains(std::string_view needle) const {
    std::lock_guard lock(mutex_);
    return std::any_of(lines_.begin(), lines_.end(), [needle](const auto& l) {
      return l.second.find(needle) != std::string::npos;
    });
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::pair<log::Level, std::string>> lines_;
  log::Sink previous_;
};

inline std::vector<float> random_floats(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

inline std::vector<std::string> numbered_tokens(std::size_t n, std::string_view prefix = "tok") {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(prefix) + std::to_string(i));
  return tokens;
}

inline EmbeddingMatrix random_matrix(Rng& rng, std::size_t vocab, std::size_t dim) {
  return EmbeddingMatrix(dim, random_floats(rng, vocab * dim), numbered_tokens(vocab));
}

// Reference implementations --------------------------------------------------

struct BruteNeighbor {
  std::size_t index = 0;
  long double similarity = 0.0L;
};

/// Mean-centred cosine argmax computed straight from the definition in long
/// double; strict comparison keeps the lowest index on ties.
inline std::optional<BruteNeighbor> brute_force_neighbor(std::span<const float> query,
                                                         const EmbeddingMatrix& m) {
  const std::size_t v = m.vocab_size();
  const std::size_t d = m.dim();
  std::vector<long double> mean(d, 0.0L);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += m.row(i)[k];
  }
  for (auto& x : mean) x /= static_cast<long double>(v);
  long double qn = 0.0L;
  for (std::size_t k = 0; k < d; ++k) qn += (query[k] - mean[k]) * (query[k] - mean[k]);
  if (qn == 0.0L) return std::nullopt;
  std::optional<BruteNeighbor> best;
  for (std::size_t i = 0; i < v; ++i) {
    long double dot = 0.0L;
    long double rn = 0.0L;
    for (std::size_t k = 0; k < d; ++k) {
      const long double r = m.row(i)[k] - mean[k];
      dot += (query[k] - mean[k]) * r;
      rn += r * r;
    }
    if (rn == 0.0L) continue;
    const long double c = dot / (std::sqrt(qn) * std::sqrt(rn));
    if (!best || c > best->similarity) best = BruteNeighbor{i, c};
  }
  return best;
}

/// Quadratic-table longest common subsequence length.
inline std::size_t lcs_oracle(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

struct EditOracle {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
};

/// Full Levenshtein table whose cells order alignments by (cost, most
/// substitutions, most deletions).
inline EditOracle edit_oracle(std::span<const std::string> ref, std::span<const std::string> hyp) {
  using Cell = std::tuple<std::size_t, long, long, std::size_t>;  // cost, -S, -D, I
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::vector<Cell>> t(n + 1, std::vector<Cell>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) t[i][0] = {i, 0, -static_cast<long>(i), 0};
  for (std::size_t j = 0; j <= m; ++j) t[0][j] = {j, 0, 0, j};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      auto [dc, ds, dd, di] = t[i - 1][j - 1];
      Cell diag = ref[i - 1] == hyp[j - 1] ? Cell{dc, ds, dd, di} : Cell{dc + 1, ds - 1, dd, di};
      auto [uc, us, ud, ui] = t[i - 1][j];
      Cell del{uc + 1, us, ud - 1, ui};
      auto [lc, ls, ld, li] = t[i][j - 1];
      Cell ins{lc + 1, ls, ld, li + 1};
      t[i][j] = std::min({diag, del, ins});
    }
  }
  const auto [c, s, d, i] = t[n][m];
  return {c, static_cast<std::size_t>(-s), static_cast<std::size_t>(-d), i};
}

/// Rank of each value: number of smaller values plus the mean position of its ties.
inline std::vector<long double> rank_oracle(std::span<const double> xs) {
  std::vector<long double> ranks;
  for (double x : xs) {
    std::size_t less = 0;
    std::size_t equal = 0;
    for (double y : xs) {
      less += y < x;
      equal += y == x;
    }
    ranks.push_back(static_cast<long double>(less) + (static_cast<long double>(equal) + 1) / 2);
  }
  return ranks;
}

inline long double pearson_oracle(const std::vector<long double>& a,
                                  const std::vector<long double>& b) {
  const long double n = static_cast<long double>(a.size());
  long double ma = 0.0L;
  long double mb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  long double sab = 0.0L;
  long double saa = 0.0L;
  long double sbb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline long double spearman_oracle(std::span<const double> xs, std::span<const double> ys) {
  return pearson_oracle(rank_oracle(xs), rank_oracle(ys));
}

}  // namespace malens::testing
