#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "cfm/continuation.hpp"
#include "cfm/experiments.hpp"
#include "cfm/matrix_io.hpp"
#include "cfm/metrics.hpp"
#include "cfm/models.hpp"
#include "cfm/random.hpp"
#include "cfm/solvers.hpp"
#include "cfm/testgen.hpp"

namespace cfm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitError = 1;   // solver / numerical failure
constexpr int kExitConfig = 2;  // bad usage, config, or missing files

int fail(int code, const std::string& kind, const std::string& message,
         const std::string& path = "") {
  json err;
  err["schema"] = "cfm/1";
  err["error"] = {{"kind", kind}, {"message", message}};
  if (!path.empty()) err["error"]["path"] = path;
  std::cout << err.dump(2) << std::endl;
  return code;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

SolverOptions solver_options_from(const json& j) {
  SolverOptions o;
  if (!j.is_object()) return o;
  if (j.contains("variant")) o.variant = variant_from_name(j.at("variant").get<std::string>());
  o.backtracking = j.value("backtracking", true);
  o.fixed_L = j.value("fixed_L", 0.0);
  o.L0 = j.value("L0", 0.0);
  o.alpha = j.value("alpha", 0.9);
  o.beta = j.value("beta", 0.5);
  o.gamma = j.value("gamma", 1e-6);
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "standard")
      o.mode = BacktrackMode::Standard;
    else if (m == "stable")
      o.mode = BacktrackMode::Stable;
    else if (m == "hybrid")
      o.mode = BacktrackMode::Hybrid;
    else
      throw InvalidArgument("unknown backtracking mode '" + m + "'");
  }
  o.restart_interval = j.value("restart", 0);
  o.max_iters = j.value("max_iters", 10000);
  o.tol = j.value("tol", 1e-8);
  o.objective_tol = j.value("objective_tol", 0.0);
  return o;
}

ContinuationOptions continuation_options_from(const json& j, const SolverOptions& solver) {
  ContinuationOptions c;
  c.solver = solver;
  if (!j.is_object()) return c;
  const std::string mode = j.value("mode", "standard");
  if (mode == "accelerated")
    c.mode = ContinuationMode::Accelerated;
  else if (mode != "standard")
    throw InvalidArgument("unknown continuation mode '" + mode + "'");
  c.mu0 = j.value("mu0", 0.0);
  c.mu_factor = j.value("mu_factor", 1.0);
  c.center_rule = j.value("recenter", true) ? CenterRule::Recenter : CenterRule::Fixed;
  c.inner_tol0 = j.value("inner_tol0", 1e-3);
  c.tol_factor = j.value("tol_factor", 1.5);
  c.final_tol = j.value("final_tol", 1e-10);
  c.max_outer = j.value("max_outer", 50);
  c.outer_tol = j.value("outer_tol", 1e-8);
  c.warm_start_dual = j.value("warm_start", true);
  c.use_cached_solver = j.value("cached_solver", false);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
}

void write_solution(const fs::path& dir, const SpaceElement& x) {
  // CSV: one coordinate per line; binary: CFM1 column matrix.
  Eigen::MatrixXd col = x.data;
  save_matrix_csv((dir / "x.csv").string(), col);
  save_matrix_cfm((dir / "x.cfm").string(), col);
}

const char* stop_name(StopReason r) {
  switch (r) {
    case StopReason::RelativeChange: return "relative_change";
    case StopReason::ObjectiveChange: return "objective_change";
    case StopReason::MaxIters: return "max_iters";
  }
  return "?";
}

}  // namespace

int cmd_solve(const std::string& config_path, const Overrides& ov) {
  json cfg;
  ModelSpec spec;
  try {
    cfg = load_config(config_path);
    spec = load_problem_json(config_path);
  } catch (const Error& e) {
    return fail(kExitConfig, "config", e.what(), config_path);
  }

  try {
    fs::create_directories(ov.out_dir);
    const fs::path out(ov.out_dir);

    SolverOptions sopts = solver_options_from(cfg.value("solver", json::object()));
    if (ov.variant) sopts.variant = variant_from_name(*ov.variant);
    if (ov.tol) sopts.tol = *ov.tol;
    if (ov.mu) spec.mu = *ov.mu;
    if (spec.mu <= 0.0) spec.mu = default_mu(spec);

    const auto t0 = std::chrono::steady_clock::now();
    SpaceElement x;
    Trace inner_trace;
    std::string stop = "relative_change";
    std::uint64_t fwd = 0, adj = 0, prox = 0;
    int iterations = 0;

    if (cfg.contains("continuation")) {
      ContinuationOptions copts = continuation_options_from(cfg.at("continuation"), sopts);
      if (ov.tol) copts.final_tol = *ov.tol;
      if (ov.mu) copts.mu0 = *ov.mu;
      copts.keep_inner_traces = true;
      ContinuationResult res = copts.mode == ContinuationMode::Accelerated
                                   ? continue_accelerated(spec, copts)
                                   : continue_standard(spec, copts);
      std::ostringstream outer_csv;
      res.outer.write_csv(outer_csv);
      write_text(out / "outer_trace.csv", outer_csv.str());
      if (!res.inner_traces.empty()) inner_trace = res.inner_traces.back();
      x = res.x;
      fwd = res.outer.rows.empty() ? 0 : res.outer.rows.back().fwd;
      adj = res.outer.rows.empty() ? 0 : res.outer.rows.back().adj;
      for (const auto& r : res.outer.rows) iterations += r.inner_iters;
      stop = "outer_loop";
    } else {
      CompositeDual cd = build(spec);
      SolveResult res = cfg.value("cached_solver", false)
                            ? solve_at_cached(cd, sopts, SpaceElement::zeros(cd.domain()))
                            : solve(cd, sopts, SpaceElement::zeros(cd.domain()));
      x = res.x;
      inner_trace = res.trace;
      iterations = res.iterations;
      stop = stop_name(res.reason);
      if (!res.trace.rows.empty()) {
        fwd = res.trace.rows.back().fwd;
        adj = res.trace.rows.back().adj;
        prox = res.trace.rows.back().prox;
      }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_solution(out, x);
    write_text(out / "trace.csv", inner_trace.to_csv());
    write_text(out / "trace.json", inner_trace.to_json());

    FeasibilityReport feas = feasibility(spec, x);
    json summary;
    summary["schema"] = "cfm/1";
    summary["kind"] = model_kind_name(spec.kind);
    summary["final_objective"] = objective_value(spec, x);
    summary["feasibility"] = {{"residual", feas.residual},
                              {"bound", feas.bound},
                              {"violation", feas.violation}};
    summary["op_counts"] = {{"fwd", fwd}, {"adj", adj}, {"prox", prox}};
    summary["iterations"] = iterations;
    summary["stop_reason"] = stop;
    summary["wall_time_s"] = wall;
    summary["outputs"] = {{"x_csv", (out / "x.csv").string()},
                          {"x_cfm", (out / "x.cfm").string()},
                          {"trace_csv", (out / "trace.csv").string()}};
    if (cfg.contains("metrics") && cfg.at("metrics").contains("psnr_reference")) {
      const std::string ref_path = cfg.at("metrics").at("psnr_reference").get<std::string>();
      fs::path rp(ref_path);
      if (rp.is_relative()) rp = fs::path(config_path).parent_path() / rp;
      Eigen::MatrixXd ref = load_matrix_csv(rp.string());
      SpaceElement ref_el = x.space.kind() == Space::Kind::Matrix
                                ? SpaceElement::from_matrix(ref)
                                : SpaceElement::from_vector(Eigen::VectorXd(
                                      Eigen::Map<const Eigen::VectorXd>(ref.data(), ref.size())));
      const double db = psnr(x, ref_el);
      if (std::isinf(db))
        summary["psnr_db"] = nullptr;  // documented sentinel for an exact match
      else
        summary["psnr_db"] = db;
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << std::endl;
    return 0;
  } catch (const IoError& e) {
    return fail(kExitConfig, "io", e.what(), config_path);
  } catch (const Error& e) {
    return fail(kExitError, "solver", e.what());
  }
}

int cmd_bench(const std::string& config_path, const Overrides& ov,
              std::vector<std::string> variants) {
  json cfg;
  ModelSpec spec;
  try {
    cfg = load_config(config_path);
    spec = load_problem_json(config_path);
    if (variants.empty() && cfg.contains("variants"))
      for (const auto& v : cfg.at("variants")) variants.push_back(v.get<std::string>());
    if (variants.empty()) variants = {"GRA", "N83", "TS", "AT", "LLM", "N07"};
  } catch (const Error& e) {
    return fail(kExitConfig, "config", e.what(), config_path);
  }

  try {
    fs::create_directories(ov.out_dir);
    const fs::path out(ov.out_dir);
    if (ov.mu) spec.mu = *ov.mu;
    if (spec.mu <= 0.0) spec.mu = default_mu(spec);

    SolverOptions base = solver_options_from(cfg.value("solver", json::object()));
    if (ov.tol) base.tol = *ov.tol;

    std::optional<SpaceElement> x_ref;
    if (cfg.contains("reference")) {
      fs::path rp(cfg.at("reference").get<std::string>());
      if (rp.is_relative()) rp = fs::path(config_path).parent_path() / rp;
      Eigen::MatrixXd ref = load_matrix_csv(rp.string());
      x_ref = SpaceElement::from_vector(Eigen::Map<const Eigen::VectorXd>(ref.data(), ref.size()));
    }

    std::ostringstream cmp;
    cmp << "variant,ops,err\n";
    char buf[40];
    for (const std::string& name : variants) {
      CompositeDual cd = build(spec);
      SolverOptions o = base;
      o.variant = variant_from_name(name);
      o.x_ref = x_ref;
      SolveResult res = solve(cd, o, SpaceElement::zeros(cd.domain()));
      write_text(out / ("trace_" + name + ".csv"), res.trace.to_csv());
      for (const auto& r : res.trace.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.err);
        cmp << name << ',' << (r.fwd + r.adj) << ',' << buf << '\n';
      }
    }
    write_text(out / "comparison.csv", cmp.str());
    std::cout << "wrote " << (out / "comparison.csv").string() << " for " << variants.size()
              << " variants\n";
    return 0;
  } catch (const IoError& e) {
    return fail(kExitConfig, "io", e.what(), config_path);
  } catch (const Error& e) {
    return fail(kExitError, "solver", e.what());
  }
}

int cmd_testgen(const std::string& config_path, const Overrides& ov) {
  json cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    return fail(kExitConfig, "config", e.what(), config_path);
  }

  try {
    fs::create_directories(ov.out_dir);
    const fs::path out(ov.out_dir);
    const std::string kind = cfg.at("kind").get<std::string>();
    const Index m = cfg.at("m").get<Index>();
    const Index n = cfg.at("n").get<Index>();
    const Index s = cfg.at("s").get<Index>();
    const double db = cfg.value("dynamic_range_db", 20.0);
    std::uint64_t seed = ov.seed.value_or(cfg.value("seed", std::uint64_t(1)));

    ExactInstance inst;
    for (int attempt = 0;; ++attempt) {
      try {
        auto rng = make_rng(seed + std::uint64_t(attempt));
        Eigen::MatrixXd a = gaussian_matrix(m, n, rng) / std::sqrt(double(m));
        Eigen::VectorXd xt = gen_sparse_signal(n, s, db, seed + std::uint64_t(attempt) + 5000);
        if (kind == "basis_pursuit") {
          inst = gen_basis_pursuit_exact(a, xt);
        } else if (kind == "lasso") {
          const double eps = cfg.value("epsilon", 0.1 * (a * xt).norm());
          inst = gen_lasso_exact(a, xt, eps);
        } else if (kind == "dantzig") {
          const double delta =
              cfg.value("delta", 0.1 * (a.transpose() * (a * xt)).lpNorm<Eigen::Infinity>());
          inst = gen_dantzig_exact(a, xt, delta, cfg.value("mu", 0.1));
        } else {
          return fail(kExitConfig, "config", "testgen kind must be basis_pursuit, lasso or dantzig");
        }
        break;
      } catch (const GenerationError&) {
        if (attempt >= 5) throw;
      }
    }

    const std::string bundle = (out / "instance.json").string();
    save_instance_json(bundle, inst);
    KktReport again = certify(load_instance_json(bundle));
    json rep;
    rep["schema"] = "cfm/1";
    rep["bundle"] = bundle;
    rep["kkt_max_residual"] = inst.kkt.max_residual;
    rep["recertified_identical"] = again.max_residual == inst.kkt.max_residual;
    std::cout << rep.dump(2) << std::endl;
    return 0;
  } catch (const Error& e) {
    return fail(kExitError, "testgen", e.what());
  }
}

namespace {

std::string csv17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int cmd_reproduce(const std::string& figure_id, const Overrides& ov) {
  try {
    fs::create_directories(ov.out_dir);
    const fs::path out(ov.out_dir);
    const std::uint64_t seed_or = ov.seed.value_or(0);

    if (figure_id == "fig2") {
      auto res = experiments::dantzig_mu_sweep(32, 128, 10, 40.0, 0.1, seed_or ? seed_or : 7);
      std::ostringstream os;
      os << "mu,err\n";
      for (const auto& r : res.rows) os << csv17(r.mu) << ',' << csv17(r.err) << '\n';
      write_text(out / "fig2_mu_sweep.csv", os.str());
      save_instance_json((out / "fig2_instance.json").string(), res.instance);
    } else if (figure_id == "fig4") {
      auto res = experiments::lasso_continuation_compare();
      std::ostringstream os;
      os << "j,err_standard,err_accelerated\n";
      for (size_t j = 0; j < res.err_standard.size(); ++j)
        os << j << ',' << csv17(res.err_standard[j]) << ',' << csv17(res.err_accelerated[j])
           << '\n';
      write_text(out / "fig4_continuation.csv", os.str());
    } else if (figure_id == "fig5") {
      auto curves = experiments::dantzig_continuation_strategies();
      std::ostringstream os;
      os << "strategy,inner_iters,err\n";
      for (const auto& c : curves)
        for (size_t k = 0; k < c.err.size(); ++k)
          os << c.label << ',' << c.inner_iters[k] << ',' << csv17(c.err[k]) << '\n';
      write_text(out / "fig5_continuation_strategies.csv", os.str());
    } else if (figure_id == "fig6") {
      auto res = experiments::quadratic_restart_compare();
      std::ostringstream os;
      os << "iter,err_gra,err_at,err_at_restart\n";
      for (size_t k = 0; k < res.err_gra.size(); ++k)
        os << k << ',' << csv17(res.err_gra[k]) << ',' << csv17(res.err_at[k]) << ','
           << csv17(res.err_at_restart[k]) << '\n';
      write_text(out / "fig6_strong_convexity.csv", os.str());
    } else if (figure_id == "fig7") {
      auto curves = experiments::dantzig_variant_comparison();
      std::ostringstream os;
      os << "variant,ops,err\n";
      for (const auto& c : curves)
        for (size_t k = 0; k < c.err.size(); ++k)
          os << c.label << ',' << c.ops[k] << ',' << csv17(c.err[k]) << '\n';
      write_text(out / "fig7_variants.csv", os.str());
    } else if (figure_id == "mc_small") {
      auto res = experiments::matrix_completion_small();
      std::ostringstream os;
      os << "svt_calls,err\n";
      for (const auto& p : res.curve) os << p.svt << ',' << csv17(p.err) << '\n';
      write_text(out / "mc_small.csv", os.str());
    } else {
      return fail(kExitConfig, "usage", "unknown figure id '" + figure_id + "'");
    }
    std::cout << "wrote " << figure_id << " data to " << ov.out_dir << "\n";
    return 0;
  } catch (const Error& e) {
    return fail(kExitError, "reproduce", e.what());
  }
}

}  // namespace cfm::cli
