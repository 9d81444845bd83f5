// Command-line front end: generate, sample, complete, params, experiment.
//
// Exit codes: 0 success, 2 configuration / usage error, 3 infeasible input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <tensorcomp/tensorcomp.hpp>

namespace tc = tensorcomp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

// Re-raises argument-parsing failures of option values as configuration errors.
template <typename Fn>
auto as_config(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw tc::ConfigError(e.what());
  }
}

struct GenerateArgs {
  int d = 0;
  int r = 0;
  int k = 3;
  std::string distribution = "gaussian";
  std::uint64_t seed = 0;
  std::string out;
  std::string components;
};

struct SampleArgs {
  std::string tensor;
  std::optional<std::uint64_t> n;
  std::optional<double> fraction;
  std::string mode = "exact";
  std::uint64_t seed = 0;
  std::string out;
};

struct CompleteArgs {
  std::string observations;
  std::string algorithm = "unfold";
  std::string lambda_star = "auto-simulation";
  std::uint64_t seed = 0;
  std::string out;
  std::string truth;
  std::optional<int> rank;
  std::optional<int> big_r;
  std::optional<double> alpha;
  std::optional<double> mu;
  std::optional<double> slack;
  std::optional<std::string> split;
  std::string side = "left";
};

struct ParamsArgs {
  std::string tensor;
  std::string matrix;
  double tol = tc::kDefaultRankTolerance;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string plotdata;
  unsigned threads = 1;
  std::optional<int> replicates;
};

int run_generate(const GenerateArgs& a) {
  tc::RandomTensorSpec spec;
  spec.d = a.d;
  spec.r = a.r;
  spec.k = a.k;
  spec.distribution = as_config([&] { return tc::parse_distribution(a.distribution); });
  spec.seed = a.seed;
  const auto g = tc::generate(spec);
  tc::save_tensor(a.out, g.tensor);
  if (!a.components.empty()) tc::save_matrix(a.components, g.components);
  return 0;
}

int run_sample(const SampleArgs& a) {
  const tc::Tensor t = tc::load_tensor(a.tensor);
  tc::Rng rng(a.seed);
  const auto mode = as_config([&] { return tc::parse_split_mode(a.mode); });
  tc::ObservationMask mask;
  if (mode == tc::SplitMode::exact) {
    if (!a.n) throw tc::ConfigError("sample: exact mode needs --n");
    mask = tc::sample_exact(t.order(), t.dim(), *a.n, rng);
  } else {
    double p = 0.0;
    if (a.fraction) p = *a.fraction;
    else if (a.n) p = static_cast<double>(*a.n) / static_cast<double>(t.size());
    else throw tc::ConfigError("sample: bernoulli mode needs --n or --fraction");
    mask = tc::sample_bernoulli(t.order(), t.dim(), p, rng);
  }
  tc::save_observations(a.out, tc::project_mask(t, mask));
  return 0;
}

int run_complete(const CompleteArgs& a) {
  const tc::PartialTensor y = tc::load_observations(a.observations);
  std::optional<tc::Tensor> truth;
  if (!a.truth.empty()) {
    truth = tc::load_tensor(a.truth);
    if (!truth->same_shape(y.tensor())) throw std::invalid_argument("complete: --truth shape differs from observations");
  }

  tc::LambdaMode mode = tc::LambdaMode::fixed;
  double value = 0.0;
  if (a.lambda_star == "auto-theorem") {
    mode = tc::LambdaMode::theorem;
  } else if (a.lambda_star == "auto-simulation") {
    mode = tc::LambdaMode::simulation;
  } else {
    try {
      std::size_t used = 0;
      value = std::stod(a.lambda_star, &used);
      if (used != a.lambda_star.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw tc::ConfigError("--lambda-star: expected a number, auto-theorem or auto-simulation");
    }
  }

  tc::CompletionResult res;
  if (tc::parse_algorithm(a.algorithm) == tc::Algorithm::unfold) {
    tc::UnfoldConfig cfg;
    cfg.lambda_mode = mode;
    cfg.lambda_value = value;
    cfg.slack = a.slack;
    cfg.seed = a.seed;
    if (a.split) cfg.split = as_config([&] { return tc::parse_split_mode(*a.split); });
    if (a.big_r || a.alpha || a.mu) {
      if (!(a.big_r && a.alpha && a.mu)) throw tc::ConfigError("complete: --R, --alpha and --mu go together");
      cfg.params = tc::UnfoldingParams{*a.big_r, *a.alpha, *a.mu};
    } else if (truth) {
      cfg.params = tc::unfolding_params(*truth);
    }
    if (mode == tc::LambdaMode::theorem && !cfg.params)
      throw tc::ConfigError("complete: auto-theorem for unfold needs --R/--alpha/--mu or --truth");
    res = tc::complete_unfold(y, cfg);
  } else {
    if (mode == tc::LambdaMode::simulation)
      throw tc::ConfigError("complete: auto-simulation is defined for --algorithm unfold only");
    tc::ContractionConfig cfg;
    cfg.lambda_mode = mode;
    cfg.lambda_value = value;
    cfg.rank = a.rank;
    cfg.seed = a.seed;
    if (a.split) cfg.split = as_config([&] { return tc::parse_split_mode(*a.split); });
    if (a.side == "left") cfg.side = tc::ContractionSide::left_singular;
    else if (a.side == "symmetrized") cfg.side = tc::ContractionSide::symmetrized;
    else throw tc::ConfigError("complete: --side must be left or symmetrized");
    if (mode == tc::LambdaMode::theorem && !a.rank) throw tc::ConfigError("complete: auto-theorem for contract needs --rank");
    res = tc::complete_contraction(y, cfg);
  }

  if (!a.out.empty()) tc::save_tensor(a.out, res.estimate);
  std::cout << res.diagnostics.to_key_values();
  if (truth) std::cout << "mse=" << tc::format_real(tc::mse(*truth, res.estimate)) << '\n';
  return 0;
}

int run_params(const ParamsArgs& a) {
  if (a.tensor.empty() == a.matrix.empty()) throw tc::ConfigError("params: give exactly one of --tensor, --matrix");
  if (!a.tensor.empty()) {
    const tc::Tensor t = tc::load_tensor(a.tensor);
    const auto p = tc::unfolding_params(t, a.tol);
    const auto ml = tc::multilinear_rank(t, a.tol);
    std::cout << "R=" << p.big_r << "\nalpha=" << tc::format_real(p.alpha) << "\nmu=" << tc::format_real(p.mu)
              << "\nmultilinear_rank=";
    for (std::size_t i = 0; i < ml.ranks.size(); ++i) std::cout << (i ? "," : "") << ml.ranks[i];
    std::cout << "\nmultilinear_rank_max=" << ml.max << '\n';
    const int a_rows = t.order() / 2;
    const auto inc = tc::incoherence_params(tc::unfold(t, a_rows, t.order() - a_rows).values);
    std::cout << "lambda=" << tc::format_real(inc.lambda) << "\ngamma=" << tc::format_real(inc.gamma)
              << "\nrho=" << tc::format_real(inc.rho) << '\n';
  } else {
    const tc::Matrix m = tc::load_matrix(a.matrix);
    const auto inc = tc::incoherence_params(m);
    std::cout << "lambda=" << tc::format_real(inc.lambda) << "\ngamma=" << tc::format_real(inc.gamma)
              << "\nrho=" << tc::format_real(inc.rho) << "\nrank=" << tc::numerical_rank(m, a.tol) << '\n';
  }
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  auto spec = tc::load_experiment_spec(a.config);
  if (a.replicates) {
    spec.replicates = *a.replicates;
    spec.validate();
  }
  tc::RunOptions opts;
  opts.threads = a.threads;
  opts.log = &std::cerr;
  const auto records = tc::run_experiment(spec, opts);
  if (records.empty()) throw std::invalid_argument("experiment: every cell was infeasible");
  if (a.out.empty()) tc::write_csv(std::cout, records);
  else tc::emit_csv(records, a.out);
  if (!a.plotdata.empty()) tc::emit_plotdata(records, a.plotdata);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral tensor completion: unfolding and contraction estimators"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a random symmetric tensor sum_s a_s^{(x)k}");
  g->add_option("--d", gen.d, "Dimension")->required();
  g->add_option("--r", gen.r, "Number of components")->required();
  g->add_option("--k", gen.k, "Order")->capture_default_str();
  g->add_option("--distribution", gen.distribution, "gaussian|rademacher")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("-o,--out", gen.out, "Tensor file")->required();
  g->add_option("--components", gen.components, "Also write the component vectors here");

  SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Reveal entries of a tensor file");
  s->add_option("--tensor", smp.tensor, "Dense tensor file")->required();
  s->add_option("--n", smp.n, "Number of entries (exact) or expected number (bernoulli)");
  s->add_option("--fraction", smp.fraction, "Reveal probability (bernoulli)");
  s->add_option("--mode", smp.mode, "exact|bernoulli")->capture_default_str();
  s->add_option("--seed", smp.seed)->capture_default_str();
  s->add_option("-o,--out", smp.out, "Observation file")->required();

  CompleteArgs cmp;
  auto* c = app.add_subcommand("complete", "Complete an observation file");
  c->add_option("-i,--observations", cmp.observations, "Observation file")->required();
  c->add_option("--algorithm", cmp.algorithm, "unfold|contract")->capture_default_str();
  c->add_option("--lambda-star", cmp.lambda_star, "<float>|auto-theorem|auto-simulation")->capture_default_str();
  c->add_option("--seed", cmp.seed)->capture_default_str();
  c->add_option("-o,--out", cmp.out, "Write the estimate here");
  c->add_option("--truth", cmp.truth, "Ground-truth tensor: oracle parameters and MSE report");
  c->add_option("--rank", cmp.rank, "Rank r for the contraction threshold");
  c->add_option("--R", cmp.big_r, "Unfolding rank bound R");
  c->add_option("--alpha", cmp.alpha, "Unfolding parameter alpha");
  c->add_option("--mu", cmp.mu, "Unfolding parameter mu");
  c->add_option("--slack", cmp.slack, "Slack t >= 1 for the unfolding threshold");
  c->add_option("--split", cmp.split, "exact|bernoulli sample split");
  c->add_option("--side", cmp.side, "left|symmetrized (contract)")->capture_default_str();

  ParamsArgs prm;
  auto* p = app.add_subcommand("params", "Report unfolding and incoherence parameters");
  p->add_option("--tensor", prm.tensor, "Dense tensor file");
  p->add_option("--matrix", prm.matrix, "Matrix file");
  p->add_option("--tol", prm.tol, "Relative rank tolerance")->capture_default_str();

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "Run a Monte-Carlo MSE sweep");
  e->add_option("-c,--config", exp.config, "key = value or JSON config")->required();
  e->add_option("-o,--out", exp.out, "CSV output (stdout if omitted)");
  e->add_option("--plotdata", exp.plotdata, "Plot-data output");
  e->add_option("--threads", exp.threads, "Worker threads (0 = all cores)")->capture_default_str();
  e->add_option("--replicates", exp.replicates, "Override the replicate count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (s->parsed()) return run_sample(smp);
    if (c->parsed()) return run_complete(cmp);
    if (p->parsed()) return run_params(prm);
    if (e->parsed()) return run_experiment_cmd(exp);
  } catch (const tc::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInfeasible;
  }
  return kExitConfig;
}
