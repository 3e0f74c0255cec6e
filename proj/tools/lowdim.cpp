// lowdim command-line front end: graph analysis, map fitting, sequential
// assimilation and sampling.  Exit codes: 0 success, 2 configuration error,
// 3 numerical failure.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lowdim/graph.hpp>
#include <lowdim/io.hpp>
#include <lowdim/map.hpp>
#include <lowdim/models.hpp>
#include <lowdim/quadrature.hpp>
#include <lowdim/sequential.hpp>
#include <lowdim/variational.hpp>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int resolve_threads(int flag_value) {
  if (const char* env = std::getenv("LOWDIM_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("LOWDIM_THREADS must be a positive integer");
  }
  if (flag_value >= 1) return flag_value;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// bad or missing input files are configuration problems, not numerical ones
lowdim::UndirectedGraph load_graph(const std::string& path) {
  try {
    return lowdim::read_graph_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

lowdim::Config load_config(const std::string& path) {
  try {
    return lowdim::Config::parse_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

Eigen::MatrixXd load_csv(const std::string& path) {
  try {
    return lowdim::read_csv_matrix(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

json pattern_to_json(const lowdim::SparsityPattern& p) {
  json a = json::array();
  for (const auto& [j, k] : p.pairs) a.push_back({j, k});
  return a;
}

json pairs_to_json(const std::set<std::pair<int, int>>& pairs) {
  json a = json::array();
  for (const auto& [i, j] : pairs) a.push_back({i, j});
  return a;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + out_path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// sparsity / ordering / decompose

int run_sparsity(const std::string& graph_path, const std::string& ordering,
                 const std::string& out_path) {
  const lowdim::UndirectedGraph g0 = load_graph(graph_path);
  lowdim::Ordering ord = lowdim::Ordering::identity(g0.n_vertices());
  if (ordering == "minfill") {
    ord = lowdim::min_fill_ordering(g0);
  } else if (ordering != "given") {
    throw ConfigError("--ordering must be 'given' or 'minfill'");
  }
  const lowdim::UndirectedGraph g = lowdim::relabel(g0, ord);
  json j;
  j["n"] = g.n_vertices();
  j["ordering"] = ord.perm;
  j["inverse_pattern"] = pattern_to_json(lowdim::inverse_sparsity(g));
  j["direct_pattern"] = pattern_to_json(lowdim::direct_sparsity(g));
  j["fill_in"] =
      pairs_to_json(lowdim::fill_in(g0, lowdim::Ordering::identity(g0.n_vertices())));
  j["fill_in_used"] = pairs_to_json(lowdim::fill_in(g0, ord));
  emit(j, out_path);
  return kExitOk;
}

int run_ordering(const std::string& graph_path, const std::string& out_path) {
  const lowdim::UndirectedGraph g = load_graph(graph_path);
  const lowdim::Ordering ord = lowdim::min_fill_ordering(g);
  const auto fill = lowdim::fill_in(g, ord);
  json j;
  j["n"] = g.n_vertices();
  j["ordering"] = ord.perm;
  j["fill_in"] = pairs_to_json(fill);
  j["fill_in_size"] = fill.size();
  emit(j, out_path);
  return kExitOk;
}

int run_decompose(const std::string& graph_path, const std::string& out_path) {
  const lowdim::UndirectedGraph g = load_graph(graph_path);
  const lowdim::DecompositionSchedule sched = lowdim::schedule_decomposition(g);
  json steps = json::array();
  for (const auto& st : sched.steps) {
    json js;
    js["A"] = std::vector<int>(st.decomp.A.begin(), st.decomp.A.end());
    js["S"] = std::vector<int>(st.decomp.S.begin(), st.decomp.S.end());
    js["B"] = std::vector<int>(st.decomp.B.begin(), st.decomp.B.end());
    js["sigma"] = st.sigma;
    js["effective_dim"] = st.effective_dim;
    steps.push_back(std::move(js));
  }
  json j;
  j["n"] = g.n_vertices();
  j["steps"] = std::move(steps);
  j["final_R_dim"] = sched.final_R_dim;
  json dims = json::array();
  for (const auto& st : sched.steps) dims.push_back(st.effective_dim);
  dims.push_back(sched.final_R_dim);
  j["effective_dims"] = std::move(dims);
  emit(j, out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

lowdim::LogDensity make_target(const lowdim::Config& cfg) {
  const std::string kind = cfg.get_string("target", "kind");
  if (kind == "standard-normal") {
    const int dim = cfg.get_int("target", "dim", 1);
    return lowdim::standard_normal_density(dim);
  }
  if (kind == "banana")
    return lowdim::banana_density(cfg.get_double("target", "curvature", 1.0));
  if (kind == "gaussian") {
    const Eigen::VectorXd mean = cfg.get_vector("target", "mean");
    const Eigen::MatrixXd cov = cfg.get_matrix("target", "cov");
    return lowdim::gaussian_density(mean, cov);
  }
  throw ConfigError("unknown target kind: " + kind);
}

lowdim::FitOptions fit_options_from(const lowdim::Config& cfg, int threads) {
  lowdim::FitOptions o;
  const std::string opt = cfg.get_string("optimizer", "kind", "bfgs");
  if (opt == "bfgs") {
    o.optimizer = lowdim::OptimizerKind::bfgs;
  } else if (opt == "newton-cg") {
    o.optimizer = lowdim::OptimizerKind::newton_cg;
  } else {
    throw ConfigError("unknown optimizer kind: " + opt);
  }
  o.max_iterations = cfg.get_int("optimizer", "max_iterations", 500);
  o.grad_tol = cfg.get_double("optimizer", "grad_tol", 1e-6);
  o.threads = threads;
  return o;
}

int run_fit(const std::string& config_path, const std::string& out_dir,
            std::uint64_t seed, int threads) {
  namespace fs = std::filesystem;
  const lowdim::Config cfg = load_config(config_path);
  const lowdim::LogDensity target = make_target(cfg);
  const int dim = target.dim;

  const int degree = cfg.get_int("template", "degree", 2);
  const lowdim::Rectifier rect = lowdim::rectifier_from_name(
      cfg.get_string("template", "rectifier", "shifted-square"));
  std::vector<std::vector<int>> actives;
  if (cfg.has("template", "graph")) {
    const lowdim::UndirectedGraph g =
        load_graph(cfg.get_string("template", "graph"));
    if (g.n_vertices() != dim)
      throw ConfigError("template graph size does not match target dim");
    const lowdim::SparsityPattern pat = lowdim::direct_sparsity(g);
    actives.resize(dim);
    for (int k = 1; k <= dim; ++k) {
      for (int j = 1; j < k; ++j)
        if (!pat.contains(j, k)) actives[k - 1].push_back(j);
      actives[k - 1].push_back(k);
    }
  }
  lowdim::MonotoneTriangularMap tmpl = lowdim::make_template(
      dim, lowdim::Ordering::identity(dim).perm, degree, actives, rect);

  const std::string rule_kind = cfg.get_string("rule", "kind", "auto");
  const std::uint64_t rule_seed =
      cfg.has("rule", "seed")
          ? static_cast<std::uint64_t>(cfg.get_double("rule", "seed"))
          : seed;
  lowdim::ReferenceRule rule = [&] {
    if (rule_kind == "auto") return lowdim::ReferenceRule::default_rule(dim, rule_seed);
    if (rule_kind == "gauss-hermite")
      return lowdim::ReferenceRule::gauss_hermite_tensor(
          dim, cfg.get_int("rule", "order", 10));
    if (rule_kind == "monte-carlo")
      return lowdim::ReferenceRule::monte_carlo(
          dim, cfg.get_int("rule", "m", 5000), rule_seed);
    throw ConfigError("unknown rule kind: " + rule_kind);
  }();

  const lowdim::FitOptions opts = fit_options_from(cfg, threads);
  auto [fitted, report] = lowdim::compute_map(target, tmpl, rule, opts);

  fs::create_directories(out_dir);
  lowdim::save_map(fitted, (fs::path(out_dir) / "checkpoint.json").string());
  json jr;
  jr["final_objective"] = report.final_objective;
  jr["variance_diagnostic"] = report.variance_diagnostic;
  jr["log_normalizing_constant"] = report.log_normalizing_constant;
  jr["iterations"] = report.iterations;
  jr["gradient_norm"] = report.gradient_norm;
  jr["converged"] = report.converged;
  jr["clamped"] = report.clamped;
  emit(jr, (fs::path(out_dir) / "report.json").string());
  std::cout << (report.converged ? "converged" : "not converged")
            << " after " << report.iterations << " iterations, diagnostic "
            << report.variance_diagnostic << "\n";
  return report.converged ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// assimilate

struct ModelSpec {
  lowdim::StateSpaceModel ssm;
  std::optional<lowdim::LinearGaussianSSM> lg;
};

ModelSpec make_model(const lowdim::Config& cfg) {
  const std::string kind = cfg.get_string("model", "kind");
  ModelSpec spec;
  if (kind == "linear-gaussian") {
    lowdim::LinearGaussianSSM m;
    m.F = cfg.get_matrix("model", "F");
    m.Q = cfg.get_matrix("model", "Q");
    m.H = cfg.get_matrix("model", "H");
    m.R = cfg.get_matrix("model", "R");
    m.mu0 = cfg.get_vector("model", "mu0");
    m.Gamma0 = cfg.get_matrix("model", "Gamma0");
    spec.ssm = lowdim::make_ssm(m);
    spec.lg = std::move(m);
    return spec;
  }
  if (kind == "sv") {
    const double mu = cfg.get_double("model", "mu");
    const double phi = cfg.get_double("model", "phi");
    spec.ssm = lowdim::make_sv_ssm(mu, phi);
    return spec;
  }
  if (kind == "sv-joint") {
    spec.ssm = lowdim::make_sv_joint_ssm();
    return spec;
  }
  throw ConfigError("unknown model kind: " + kind);
}

lowdim::TemplateConfig template_config_from(const lowdim::Config& cfg,
                                            std::uint64_t seed, int threads) {
  lowdim::TemplateConfig tc;
  tc.degree = cfg.get_int("template", "degree", 2);
  tc.rectifier = lowdim::rectifier_from_name(
      cfg.get_string("template", "rectifier", "shifted-square"));
  tc.gh_order = cfg.get_int("rule", "gh_order", 10);
  tc.mc_m = cfg.get_int("rule", "m", 5000);
  tc.seed = cfg.has("rule", "seed")
                ? static_cast<std::uint64_t>(cfg.get_double("rule", "seed"))
                : seed;
  tc.regression_points = cfg.get_int("template", "regression_points", 2000);
  tc.fit = fit_options_from(cfg, threads);
  return tc;
}

void annotate_manifest(const std::string& dir, const json& extra) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  json man;
  if (in) in >> man;
  in.close();
  for (auto it = extra.begin(); it != extra.end(); ++it) man[it.key()] = it.value();
  std::ofstream out(path, std::ios::binary);
  out << man.dump(2) << "\n";
}

int run_assimilate(const std::string& config_path, const std::string& obs_path,
                   const std::string& out_dir, bool resume, bool closed_form,
                   bool fixed_point, std::uint64_t seed, int threads) {
  if (closed_form && fixed_point)
    throw ConfigError("--closed-form and --fixed-point are mutually exclusive");
  const lowdim::Config cfg = load_config(config_path);
  const Eigen::MatrixXd obs = load_csv(obs_path);
  if (obs.rows() < 2) throw ConfigError("need at least two observation rows");
  const ModelSpec spec = make_model(cfg);
  const lowdim::TemplateConfig tc = template_config_from(cfg, seed, threads);

  lowdim::SmootherState state;
  const lowdim::SmootherState* resume_ptr = nullptr;
  lowdim::SmootherState resumed;
  if (resume) {
    resumed = lowdim::load_state(out_dir);
    resume_ptr = &resumed;
  }

  if (closed_form) {
    if (!spec.lg) throw ConfigError("--closed-form requires a linear-gaussian model");
    state = lowdim::assimilate_closed_form(*spec.lg, obs, resume_ptr);
    lowdim::save_state(state, out_dir);
    annotate_manifest(out_dir, {{"log_evidence", lowdim::evidence(state)}});
    std::cout << "assimilated " << state.num_steps() << " steps, log-evidence "
              << lowdim::evidence(state) << "\n";
    return kExitOk;
  }
  if (fixed_point) {
    if (resume) throw ConfigError("--resume is not supported with --fixed-point");
    state = lowdim::fixed_point_smoother(spec.ssm, obs, tc);
    lowdim::save_state(state, out_dir);
    annotate_manifest(out_dir, {{"log_evidence", lowdim::evidence(state)}});
    std::cout << "assimilated " << state.num_steps() << " fixed-point steps\n";
    return kExitOk;
  }

  // fit step by step so a failure index can be recorded in the manifest
  const int total_steps = static_cast<int>(obs.rows()) - 1;
  state = resume ? resumed : lowdim::SmootherState{};
  bool have_state = resume;
  for (int k = have_state ? state.num_steps() : 0; k < total_steps; ++k) {
    try {
      state = lowdim::assimilate(spec.ssm, obs.topRows(k + 2), tc,
                                 have_state ? &state : nullptr);
      have_state = true;
    } catch (const std::exception& e) {
      if (have_state) lowdim::save_state(state, out_dir);
      annotate_manifest(out_dir,
                        {{"failure_index", k}, {"failure_message", e.what()}});
      std::cerr << "step " << k << " failed: " << e.what() << "\n";
      return kExitNumerical;
    }
  }
  lowdim::save_state(state, out_dir);
  annotate_manifest(out_dir, {{"log_evidence", lowdim::evidence(state)}});
  std::cout << "assimilated " << state.num_steps() << " steps, log-evidence "
            << lowdim::evidence(state) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

Eigen::MatrixXd percentile_table(const Eigen::MatrixXd& samples) {
  static const double kPercentiles[] = {5, 25, 40, 60, 75, 95};
  Eigen::MatrixXd table(samples.cols(), 7);
  for (int c = 0; c < samples.cols(); ++c) {
    std::vector<double> col(samples.rows());
    for (int r = 0; r < samples.rows(); ++r) col[r] = samples(r, c);
    std::sort(col.begin(), col.end());
    table(c, 0) = c;
    for (int q = 0; q < 6; ++q) {
      const double pos = kPercentiles[q] / 100.0 * (col.size() - 1);
      const size_t lo = static_cast<size_t>(pos);
      const size_t hi = std::min(lo + 1, col.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      table(c, q + 1) = (1.0 - frac) * col[lo] + frac * col[hi];
    }
  }
  return table;
}

int run_sample(const std::string& state_dir, const std::string& kind, int m,
               std::uint64_t seed, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const lowdim::SmootherState state = lowdim::load_state(state_dir);
  Eigen::MatrixXd samples;
  if (kind == "smoothing") {
    samples = lowdim::sample_smoothing(state, m, seed);
  } else if (kind == "filtering") {
    samples = lowdim::sample_filtering(state, m, seed);
  } else if (kind == "fixed-point") {
    if (state.mode != lowdim::SmootherMode::fixed_point)
      throw ConfigError("state directory does not hold a fixed-point smoother");
    lowdim::NormalSampler s(seed);
    const lowdim::MonotoneTriangularMap& t = state.t_theta.back();
    samples.resize(m, state.p);
    for (int r = 0; r < m; ++r)
      samples.row(r) = t.evaluate(s.vector(state.p)).transpose();
  } else {
    throw ConfigError("--kind must be smoothing, filtering or fixed-point");
  }
  fs::create_directories(out_dir);
  lowdim::write_csv_matrix(samples, (fs::path(out_dir) / "samples.csv").string());
  lowdim::write_csv_matrix(
      percentile_table(samples), (fs::path(out_dir) / "percentiles.csv").string(),
      {"index", "p5", "p25", "p40", "p60", "p75", "p95"});
  std::cout << "wrote " << samples.rows() << " samples with "
            << samples.cols() << " columns\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational inference via low-dimensional transport maps"};
  app.require_subcommand(1);

  std::string graph_path, out_path, ordering = "given";
  auto* sp = app.add_subcommand("sparsity", "sparsity patterns of a Markov graph");
  sp->add_option("graph", graph_path, "graph file")->required();
  sp->add_option("--ordering", ordering, "given|minfill");
  sp->add_option("-o,--output", out_path, "output JSON path (default stdout)");

  std::string og_graph, og_out;
  auto* op = app.add_subcommand("ordering", "min-fill elimination ordering");
  op->add_option("graph", og_graph, "graph file")->required();
  op->add_option("-o,--output", og_out, "output JSON path (default stdout)");

  std::string dc_graph, dc_out;
  auto* dp = app.add_subcommand("decompose", "recursive decomposition schedule");
  dp->add_option("graph", dc_graph, "graph file")->required();
  dp->add_option("-o,--output", dc_out, "output JSON path (default stdout)");

  std::string fit_config, fit_out = "fit-out";
  std::uint64_t fit_seed = 20260823ULL;
  int fit_threads = 0;
  auto* fp = app.add_subcommand("fit", "fit a transport map to a target density");
  fp->add_option("--config", fit_config, "config file")->required();
  fp->add_option("-o,--output", fit_out, "output directory");
  fp->add_option("--seed", fit_seed, "seed for Monte Carlo rules");
  fp->add_option("--threads", fit_threads, "worker threads (0 = all cores)");

  std::string as_config, as_obs, as_out = "state";
  bool as_resume = false, as_closed = false, as_fixed = false;
  std::uint64_t as_seed = 20260823ULL;
  int as_threads = 0;
  auto* ap = app.add_subcommand("assimilate", "sequential smoothing of observations");
  ap->add_option("--config", as_config, "model config file")->required();
  ap->add_option("--obs", as_obs, "observations CSV")->required();
  ap->add_option("-o,--output", as_out, "state directory");
  ap->add_flag("--resume", as_resume, "extend an existing state directory");
  ap->add_flag("--closed-form", as_closed, "closed-form linear-Gaussian steps");
  ap->add_flag("--fixed-point", as_fixed, "fixed-point smoother for the initial state");
  ap->add_option("--seed", as_seed, "seed for Monte Carlo rules");
  ap->add_option("--threads", as_threads, "worker threads (0 = all cores)");

  std::string sm_state, sm_kind = "smoothing", sm_out = "samples";
  int sm_m = 1000;
  std::uint64_t sm_seed = 20260823ULL;
  auto* mp = app.add_subcommand("sample", "draw samples from a fitted state");
  mp->add_option("state", sm_state, "state directory")->required();
  mp->add_option("--kind", sm_kind, "smoothing|filtering|fixed-point");
  mp->add_option("-m,--samples", sm_m, "number of samples");
  mp->add_option("--seed", sm_seed, "sampler seed");
  mp->add_option("-o,--output", sm_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sp->parsed()) return run_sparsity(graph_path, ordering, out_path);
    if (op->parsed()) return run_ordering(og_graph, og_out);
    if (dp->parsed()) return run_decompose(dc_graph, dc_out);
    if (fp->parsed())
      return run_fit(fit_config, fit_out, fit_seed, resolve_threads(fit_threads));
    if (ap->parsed())
      return run_assimilate(as_config, as_obs, as_out, as_resume, as_closed,
                            as_fixed, as_seed, resolve_threads(as_threads));
    if (mp->parsed()) return run_sample(sm_state, sm_kind, sm_m, sm_seed, sm_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
