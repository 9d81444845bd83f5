#pragma once

// Monte-Carlo harness: replicated completion runs over a (d, n) grid,
// normalized-MSE aggregation and CSV / plot-data emission.
//
// Every replicate draws from its own stream:
//   tensor    stream_seed(seed, 1, d, replicate)
//   mask      stream_seed(seed, 2, d, n, replicate)
//   algorithm stream_seed(seed, 3, d, n, replicate)
// so a replicate sees the same ground truth across the n grid, and results
// are identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "completion.hpp"
#include "contraction_completion.hpp"
#include "io.hpp"
#include "matrix_estimation.hpp"
#include "random.hpp"
#include "random_models.hpp"
#include "tensor.hpp"
#include "unfold_completion.hpp"

namespace tensorcomp {

/// Invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { unfold, contract };

inline const char* to_string(Algorithm a) { return a == Algorithm::unfold ? "unfold" : "contract"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "unfold") return Algorithm::unfold;
  if (s == "contract") return Algorithm::contract;
  throw ConfigError("unknown algorithm '" + s + "' (expected unfold|contract)");
}

/// ||estimate - truth||_F^2 / ||truth||_F^2.
inline double mse(const Tensor& truth, const Tensor& estimate) {
  if (!truth.same_shape(estimate)) throw std::invalid_argument("mse: shape mismatch");
  const double den = truth.as_vector().squaredNorm();
  if (den == 0.0) throw std::invalid_argument("mse: zero ground truth");
  return (estimate.as_vector() - truth.as_vector()).squaredNorm() / den;
}

struct ExperimentSpec {
  Algorithm algorithm = Algorithm::unfold;
  int k = 3;
  std::vector<int> dims;
  /// Exactly one of rank / rank_ratio is set; rank_ratio gives r = round(ratio * d).
  std::optional<int> rank;
  std::optional<double> rank_ratio;
  /// n values; with n_scaled they are multiples of d^{k/2} (unfold) or
  /// r d^{3/2} (contract), rounded to the nearest integer.
  std::vector<double> n_grid;
  bool n_scaled = true;
  int replicates = 100;
  std::uint64_t seed = 0;
  LambdaMode lambda_mode = LambdaMode::simulation;
  double lambda_value = 0.0;
  double simulation_factor = 3.0;
  /// How E is drawn: uniform n-subset (exact) or Bernoulli(n / d^k).
  SplitMode sampling = SplitMode::exact;
  /// Sample split inside the algorithm; unset picks exact for unfold and
  /// bernoulli for contract.
  std::optional<SplitMode> split;
  ComponentDistribution distribution = ComponentDistribution::gaussian;
  ContractionSide side = ContractionSide::left_singular;

  int rank_for(int d) const {
    if (rank) return *rank;
    if (rank_ratio) return std::max(1, static_cast<int>(std::lround(*rank_ratio * d)));
    throw ConfigError("experiment: rank not configured");
  }

  /// The n_rescaled denominator of a cell.
  double n_scale(int d) const {
    const double dd = d;
    if (algorithm == Algorithm::unfold) return std::pow(dd, k / 2.0);
    return rank_for(d) * std::pow(dd, 1.5);
  }

  std::uint64_t n_for(int d, double grid_value) const {
    if (!n_scaled) return static_cast<std::uint64_t>(std::llround(grid_value));
    return static_cast<std::uint64_t>(std::llround(grid_value * n_scale(d)));
  }

  void validate() const {
    if (k < 3) throw ConfigError("experiment: k must be >= 3");
    if (algorithm == Algorithm::contract && k != 3) throw ConfigError("experiment: contract requires k = 3");
    if (dims.empty()) throw ConfigError("experiment: no d values");
    for (int d : dims)
      if (d < 2) throw ConfigError("experiment: every d must be >= 2");
    if (rank.has_value() == rank_ratio.has_value()) throw ConfigError("experiment: set exactly one of r, r_ratio");
    if (rank && *rank < 1) throw ConfigError("experiment: r must be >= 1");
    if (rank_ratio && !(*rank_ratio > 0.0)) throw ConfigError("experiment: r_ratio must be positive");
    if (n_grid.empty()) throw ConfigError("experiment: empty n grid");
    for (double n : n_grid)
      if (!(n > 0.0)) throw ConfigError("experiment: n grid values must be positive");
    if (replicates < 1) throw ConfigError("experiment: replicates must be >= 1");
    if (lambda_mode == LambdaMode::simulation && algorithm == Algorithm::contract)
      throw ConfigError("experiment: simulation threshold applies to unfold only");
    if (lambda_mode == LambdaMode::fixed && !(lambda_value >= 0.0))
      throw ConfigError("experiment: fixed lambda_star must be non-negative");
  }
};

/// One aggregated (d, n) cell.
struct MseRecord {
  std::string algorithm;
  int k = 0;
  int d = 0;
  int r = 0;
  std::uint64_t n = 0;
  double n_rescaled = 0.0;
  int replicates = 0;
  /// Mean squared error over mean squared norm across replicates.
  double mse_mean = 0.0;
  /// Standard error of the per-replicate normalized errors.
  double mse_stderr = 0.0;
  double lambda_star_mean = 0.0;
  double rank_q_mean = 0.0;
  std::uint64_t seed = 0;
  /// Mean of per-replicate normalized errors (plot data only; not in the CSV).
  double mse_ratio_mean = 0.0;
};

struct RunOptions {
  /// Worker threads; 0 uses the hardware concurrency, 1 runs inline.
  unsigned threads = 1;
  /// Receives skip notices; may be null.
  std::ostream* log = nullptr;
};

struct ReplicateOutcome {
  double error_sq = 0.0;
  double truth_sq = 0.0;
  double lambda_star = 0.0;
  double rank_q = 0.0;
};

/// One replicate of one cell.
inline ReplicateOutcome run_replicate(const ExperimentSpec& spec, int d, std::uint64_t n, int replicate) {
  const int r = spec.rank_for(d);
  RandomTensorSpec tspec;
  tspec.d = d;
  tspec.r = r;
  tspec.k = spec.k;
  tspec.distribution = spec.distribution;
  tspec.seed = stream_seed(spec.seed, 1, d, replicate);
  const Tensor truth = generate(tspec).tensor;

  Rng mask_rng(stream_seed(spec.seed, 2, d, n, replicate));
  const auto capacity = static_cast<double>(truth.size());
  ObservationMask mask = spec.sampling == SplitMode::exact
                             ? sample_exact(spec.k, d, n, mask_rng)
                             : sample_bernoulli(spec.k, d, static_cast<double>(n) / capacity, mask_rng);
  const auto algo_seed = stream_seed(spec.seed, 3, d, n, replicate);

  ReplicateOutcome out;
  out.truth_sq = truth.as_vector().squaredNorm();
  if (mask.empty()) {
    out.error_sq = out.truth_sq;  // nothing observed: the estimate is zero
    return out;
  }
  const PartialTensor y = project_mask(truth, mask);

  CompletionResult res;
  if (spec.algorithm == Algorithm::unfold) {
    UnfoldConfig cfg;
    cfg.lambda_mode = spec.lambda_mode;
    cfg.lambda_value = spec.lambda_value;
    cfg.simulation_factor = spec.simulation_factor;
    cfg.split = spec.split.value_or(SplitMode::exact);
    cfg.seed = algo_seed;
    if (spec.lambda_mode == LambdaMode::theorem) cfg.params = unfolding_params(truth);
    res = complete_unfold(y, cfg);
  } else {
    ContractionConfig cfg;
    cfg.lambda_mode = spec.lambda_mode;
    cfg.lambda_value = spec.lambda_value;
    cfg.rank = r;
    cfg.split = spec.split.value_or(SplitMode::bernoulli);
    cfg.side = spec.side;
    cfg.seed = algo_seed;
    res = complete_contraction(y, cfg);
  }
  out.error_sq = (res.estimate.as_vector() - truth.as_vector()).squaredNorm();
  out.lambda_star = res.diagnostics.lambda_star;
  out.rank_q = static_cast<double>(res.diagnostics.rank_q);
  return out;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(threads, count);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline std::vector<MseRecord> run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
  spec.validate();
  struct Cell {
    int d;
    std::uint64_t n;
  };
  std::vector<Cell> cells;
  for (int d : spec.dims) {
    const auto capacity = checked_pow(static_cast<std::uint64_t>(d), spec.k);
    for (double g : spec.n_grid) {
      const auto n = spec.n_for(d, g);
      if (n > capacity || n == 0) {
        if (opts.log)
          *opts.log << "skipping cell d=" << d << " n=" << n << ": n must lie in [1, d^k = " << capacity << "]\n";
        continue;
      }
      cells.push_back({d, n});
    }
  }

  const auto reps = static_cast<std::size_t>(spec.replicates);
  std::vector<ReplicateOutcome> outcomes(cells.size() * reps);
  detail::parallel_for(outcomes.size(), opts.threads, [&](std::size_t job) {
    const auto& cell = cells[job / reps];
    outcomes[job] = run_replicate(spec, cell.d, cell.n, static_cast<int>(job % reps));
  });

  std::vector<MseRecord> records;
  records.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    MseRecord rec;
    rec.algorithm = to_string(spec.algorithm);
    rec.k = spec.k;
    rec.d = cells[c].d;
    rec.r = spec.rank_for(cells[c].d);
    rec.n = cells[c].n;
    rec.n_rescaled = static_cast<double>(rec.n) / spec.n_scale(rec.d);
    rec.replicates = spec.replicates;
    rec.seed = spec.seed;
    double err = 0.0, norm = 0.0, lambda = 0.0, rank = 0.0, ratio = 0.0;
    std::vector<double> ratios;
    for (std::size_t i = 0; i < reps; ++i) {
      const auto& o = outcomes[c * reps + i];
      err += o.error_sq;
      norm += o.truth_sq;
      lambda += o.lambda_star;
      rank += o.rank_q;
      ratios.push_back(o.error_sq / o.truth_sq);
      ratio += ratios.back();
    }
    const double count = static_cast<double>(reps);
    rec.mse_mean = err / norm;
    rec.mse_ratio_mean = ratio / count;
    rec.lambda_star_mean = lambda / count;
    rec.rank_q_mean = rank / count;
    if (reps > 1) {
      double ss = 0.0;
      for (double q : ratios) ss += (q - rec.mse_ratio_mean) * (q - rec.mse_ratio_mean);
      rec.mse_stderr = std::sqrt(ss / (count - 1.0) / count);
    }
    records.push_back(rec);
  }
  return records;
}

inline constexpr const char* kCsvHeader =
    "algorithm,k,d,r,n,n_rescaled,replicates,mse_mean,mse_stderr,lambda_star_mean,rank_q_mean,seed";

inline void write_csv(std::ostream& os, const std::vector<MseRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records)
    os << r.algorithm << ',' << r.k << ',' << r.d << ',' << r.r << ',' << r.n << ',' << format_real(r.n_rescaled)
       << ',' << r.replicates << ',' << format_real(r.mse_mean) << ',' << format_real(r.mse_stderr) << ','
       << format_real(r.lambda_star_mean) << ',' << format_real(r.rank_q_mean) << ',' << r.seed << '\n';
}

inline std::vector<MseRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw FormatError("csv: missing or unexpected header");
  std::vector<MseRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw FormatError("csv: expected 12 fields, got " + std::to_string(f.size()));
    auto real = [](const std::string& s) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError("csv: bad real '" + s + "'");
      return v;
    };
    auto integer = [](const std::string& s) {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError("csv: bad integer '" + s + "'");
      return v;
    };
    MseRecord r;
    r.algorithm = f[0];
    r.k = static_cast<int>(integer(f[1]));
    r.d = static_cast<int>(integer(f[2]));
    r.r = static_cast<int>(integer(f[3]));
    r.n = integer(f[4]);
    r.n_rescaled = real(f[5]);
    r.replicates = static_cast<int>(integer(f[6]));
    r.mse_mean = real(f[7]);
    r.mse_stderr = real(f[8]);
    r.lambda_star_mean = real(f[9]);
    r.rank_q_mean = real(f[10]);
    r.seed = integer(f[11]);
    out.push_back(r);
  }
  return out;
}

/// Whitespace-separated columns, one block per d separated by two blank
/// lines (addressable as gnuplot `index` blocks).
inline void write_plotdata(std::ostream& os, const std::vector<MseRecord>& records) {
  std::map<int, std::vector<const MseRecord*>> by_d;
  for (const auto& r : records) by_d[r.d].push_back(&r);
  bool first = true;
  for (const auto& [d, rows] : by_d) {
    if (!first) os << "\n\n";
    first = false;
    os << "# algorithm=" << rows.front()->algorithm << " d=" << d << " r=" << rows.front()->r << '\n'
       << "# n n_rescaled mse_mean mse_stderr mse_ratio_mean lambda_star_mean rank_q_mean\n";
    for (const auto* r : rows)
      os << r->n << ' ' << format_real(r->n_rescaled) << ' ' << format_real(r->mse_mean) << ' '
         << format_real(r->mse_stderr) << ' ' << format_real(r->mse_ratio_mean) << ' '
         << format_real(r->lambda_star_mean) << ' ' << format_real(r->rank_q_mean) << '\n';
  }
}

inline void emit_csv(const std::vector<MseRecord>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("emit_csv: no records");
  auto out = detail::open_out(path);
  write_csv(out, records);
  if (!out) throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

inline void emit_plotdata(const std::vector<MseRecord>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("emit_plotdata: no records");
  auto out = detail::open_out(path);
  write_plotdata(out, records);
  if (!out) throw std::runtime_error("emit_plotdata: write to '" + path + "' failed");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

inline std::map<std::string, std::string> json_to_pairs(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: JSON root must be an object");
  std::map<std::string, std::string> out;
  auto scalar = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return format_real(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    throw ConfigError("config: unsupported JSON value " + v.dump());
  };
  for (const auto& [key, v] : j.items()) {
    if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) joined += (joined.empty() ? "" : ",") + scalar(e);
      out[key] = joined;
    } else {
      out[key] = scalar(v);
    }
  }
  return out;
}

inline std::map<std::string, std::string> keyvalue_to_pairs(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find_first_of("=:");
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (out.contains(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace detail

/// Parses a `key = value` config (or a JSON object with the same keys).
/// Keys: algorithm, k, d, r | r_ratio, n, n_unit (scaled|absolute),
/// replicates, seed, lambda_star (theorem|simulation|<value>),
/// simulation_factor, sampling, split, distribution, side.
inline ExperimentSpec parse_experiment_spec(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const auto pairs = first != std::string::npos && text[first] == '{' ? detail::json_to_pairs(text)
                                                                      : detail::keyvalue_to_pairs(text);
  ExperimentSpec spec;
  bool lambda_set = false;
  try {
    for (const auto& [key, value] : pairs) {
      if (key == "algorithm") {
        spec.algorithm = parse_algorithm(value);
      } else if (key == "k") {
        spec.k = detail::parse_int<int>(key, value);
      } else if (key == "d") {
        spec.dims.clear();
        for (const auto& s : detail::split_list(value)) spec.dims.push_back(detail::parse_int<int>(key, s));
      } else if (key == "r") {
        spec.rank = detail::parse_int<int>(key, value);
      } else if (key == "r_ratio") {
        spec.rank_ratio = detail::parse_real(key, value);
      } else if (key == "n") {
        spec.n_grid.clear();
        for (const auto& s : detail::split_list(value)) spec.n_grid.push_back(detail::parse_real(key, s));
      } else if (key == "n_unit") {
        if (value == "scaled") spec.n_scaled = true;
        else if (value == "absolute") spec.n_scaled = false;
        else throw ConfigError("n_unit: expected scaled|absolute");
      } else if (key == "replicates") {
        spec.replicates = detail::parse_int<int>(key, value);
      } else if (key == "seed") {
        spec.seed = detail::parse_int<std::uint64_t>(key, value);
      } else if (key == "lambda_star") {
        lambda_set = true;
        if (value == "theorem") spec.lambda_mode = LambdaMode::theorem;
        else if (value == "simulation") spec.lambda_mode = LambdaMode::simulation;
        else {
          spec.lambda_mode = LambdaMode::fixed;
          spec.lambda_value = detail::parse_real(key, value);
        }
      } else if (key == "simulation_factor") {
        spec.simulation_factor = detail::parse_real(key, value);
      } else if (key == "sampling") {
        spec.sampling = parse_split_mode(value);
      } else if (key == "split") {
        spec.split = parse_split_mode(value);
      } else if (key == "distribution") {
        spec.distribution = parse_distribution(value);
      } else if (key == "side") {
        if (value == "left") spec.side = ContractionSide::left_singular;
        else if (value == "symmetrized") spec.side = ContractionSide::symmetrized;
        else throw ConfigError("side: expected left|symmetrized");
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!lambda_set) spec.lambda_mode = spec.algorithm == Algorithm::unfold ? LambdaMode::simulation : LambdaMode::theorem;
  spec.validate();
  return spec;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_spec(ss.str());
}

}  // namespace tensorcomp
