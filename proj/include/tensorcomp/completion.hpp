#pragma once

// Result types shared by both completion algorithms.

#include <chrono>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace tensorcomp {

enum class LambdaMode {
  fixed,       // use the configured value as is
  theorem,     // closed-form prescription of the algorithm's guarantee
  simulation,  // 3 (d^{k/2} / n)^{2/3} ||B||_op (unfolding only)
};

inline const char* to_string(LambdaMode m) {
  switch (m) {
    case LambdaMode::fixed: return "fixed";
    case LambdaMode::theorem: return "theorem";
    case LambdaMode::simulation: return "simulation";
  }
  return "?";
}

struct CompletionDiagnostics {
  std::string algorithm;
  std::uint64_t n = 0;
  /// delta_1 = n / (2 d^k) for unfolding; the split rate delta for contraction.
  double delta = 0.0;
  /// delta_2 = delta_1 / (1 - delta_1) for unfolding; unused (0) for contraction.
  double delta2 = 0.0;
  /// ||B||_op or ||W||_op.
  double spectral_norm = 0.0;
  double lambda_star = 0.0;
  std::int64_t rank_q = 0;
  std::uint64_t split_sizes[3] = {0, 0, 0};
  /// Largest |cell count - exact target| of an exact-size triple split.
  double split_rounding_slack = 0.0;
  double elapsed_seconds = 0.0;
  std::vector<std::string> warnings;

  /// Flat `key=value` lines; warnings are emitted as repeated `warning=` keys.
  std::string to_key_values() const {
    std::ostringstream os;
    os.precision(17);
    os << "algorithm=" << algorithm << '\n'
       << "n=" << n << '\n'
       << "delta=" << delta << '\n'
       << "delta2=" << delta2 << '\n'
       << "spectral_norm=" << spectral_norm << '\n'
       << "lambda_star=" << lambda_star << '\n'
       << "rank_q=" << rank_q << '\n'
       << "split_sizes=" << split_sizes[0] << ',' << split_sizes[1] << ',' << split_sizes[2] << '\n'
       << "split_rounding_slack=" << split_rounding_slack << '\n'
       << "elapsed_seconds=" << elapsed_seconds << '\n';
    for (const auto& w : warnings) os << "warning=" << w << '\n';
    return os.str();
  }
};

struct CompletionResult {
  Tensor estimate;
  CompletionDiagnostics diagnostics;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

}  // namespace tensorcomp
