#include "cfm/testgen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cfm/continuation.hpp"
#include "cfm/random.hpp"
#include "cfm/solvers.hpp"

namespace cfm {

using nlohmann::json;

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::vector<Index> support_of(const Eigen::VectorXd& x) {
  std::vector<Index> t;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) t.push_back(i);
  return t;
}

//! High-accuracy basis pursuit solve via re-centered continuation at fixed mu
//! (finite termination by the exact penalty property of the LP).
std::pair<Eigen::VectorXd, Eigen::VectorXd> solve_bp_tight(const Eigen::MatrixXd& A,
                                                           const Eigen::VectorXd& b,
                                                           const GenBudget& budget) {
  ModelSpec spec;
  spec.kind = ModelKind::BasisPursuit;
  spec.A = make_dense(A);
  spec.y = SpaceElement::from_vector(b);
  spec.mu = default_mu(spec);

  ContinuationOptions copts;
  copts.mode = ContinuationMode::Standard;
  copts.center_rule = CenterRule::Recenter;
  copts.mu_factor = 1.0;
  copts.inner_tol0 = 1e-4;
  copts.tol_factor = 2.0;
  copts.final_tol = budget.tol;
  copts.max_outer = budget.max_outer;
  copts.outer_tol = 1e-13;
  copts.solver.variant = Variant::AT;
  copts.solver.restart_interval = budget.restart_interval;
  copts.solver.max_iters = budget.inner_max_iters;
  copts.solver.trace_phi = false;

  ContinuationResult res = continue_standard(spec, copts);
  return {res.x.data, res.z.data};
}

struct Perturbation {
  Eigen::VectorXd d;
  Eigen::MatrixXd A_tilde;
};

//! Diagonal scaling making the dual certificate exact: on the support of x,
//! (Diag(d) g)_i equals target_i exactly; off the support, entries of |g|
//! at or above margin * cap are pulled back to margin * cap.
Perturbation make_diagonal_fix(const Eigen::MatrixXd& A, const Eigen::VectorXd& g,
                               const std::vector<Index>& support, const Eigen::VectorXd& targets,
                               double cap, double margin) {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(A.cols());
  std::vector<bool> on(size_t(A.cols()), false);
  for (size_t k = 0; k < support.size(); ++k) {
    const Index i = support[k];
    if (g[i] == 0.0) throw GenerationError("dual certificate vanishes on the support");
    d[i] = targets[Index(k)] / g[i];
    if (!(d[i] > 0.0))
      throw GenerationError("dual certificate has the wrong sign on the support");
    on[size_t(i)] = true;
  }
  for (Index i = 0; i < A.cols(); ++i) {
    if (on[size_t(i)]) continue;
    const double a = std::abs(g[i]);
    if (a >= margin * cap) d[i] = margin * cap / a;
  }
  Perturbation p;
  p.A_tilde = A * d.asDiagonal();
  p.d = std::move(d);
  return p;
}

void check_d_near_identity(const Eigen::VectorXd& d) {
  if ((d.array() - 1.0).abs().maxCoeff() > 0.05)
    throw GenerationError("diagonal perturbation strayed too far from the identity");
}

Eigen::VectorXd solve_support_system(const Eigen::MatrixXd& A_tilde,
                                     const std::vector<Index>& support,
                                     const Eigen::VectorXd& b) {
  if (Index(support.size()) > A_tilde.rows())
    throw GenerationError("support larger than the measurement count (degenerate face)");
  Eigen::MatrixXd at(A_tilde.rows(), Index(support.size()));
  for (size_t k = 0; k < support.size(); ++k) at.col(Index(k)) = A_tilde.col(support[k]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
  if (qr.rank() < at.cols()) throw GenerationError("rank-deficient support system");
  Eigen::VectorXd xt = qr.solve(b);
  if ((at * xt - b).norm() > 1e-10 * std::max(1.0, b.norm()))
    throw GenerationError("support system is inconsistent with the data");
  return xt;
}

}  // namespace

Eigen::VectorXd gen_sparse_signal(Index n, Index s, double dynamic_range_db, std::uint64_t seed) {
  if (s < 0 || s > n) throw InvalidArgument("gen_sparse_signal: need 0 <= s <= n");
  if (dynamic_range_db < 0.0) throw InvalidArgument("gen_sparse_signal: negative dynamic range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (s == 0) return x;
  auto rng = make_rng(seed);
  std::vector<Index> support = sample_without_replacement(n, s, rng);
  // Exponents spaced evenly over the range, so max/min magnitude is exactly
  // 10^(db/20); magnitudes are shuffled over the support.
  std::vector<double> mags(static_cast<size_t>(s));
  for (Index k = 0; k < s; ++k) {
    const double e = (s == 1) ? 0.0 : -dynamic_range_db / 20.0 * double(k) / double(s - 1);
    mags[size_t(k)] = std::pow(10.0, e);
  }
  std::shuffle(mags.begin(), mags.end(), rng);
  std::uniform_int_distribution<int> coin(0, 1);
  for (Index k = 0; k < s; ++k) {
    const double sign = coin(rng) ? 1.0 : -1.0;
    x[support[size_t(k)]] = sign * mags[size_t(k)];
  }
  return x;
}

ExactInstance gen_basis_pursuit_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                                      const GenBudget& budget) {
  if (A.cols() != x_tilde.size()) throw DimensionError("gen_basis_pursuit_exact: dims mismatch");
  const Eigen::VectorXd b = A * x_tilde;
  auto [x_hat, lambda_hat] = solve_bp_tight(A, b, budget);

  std::vector<Index> support = support_of(x_hat);
  if (support.empty()) throw GenerationError("basis pursuit solve returned the zero vector");

  const Eigen::VectorXd g = A.transpose() * lambda_hat;
  Eigen::VectorXd targets(Index(support.size()));
  for (size_t k = 0; k < support.size(); ++k) targets[Index(k)] = sgn(x_hat[support[k]]);

  Perturbation p = make_diagonal_fix(A, g, support, targets, 1.0, 0.99);
  check_d_near_identity(p.d);

  Eigen::VectorXd xt = solve_support_system(p.A_tilde, support, b);
  Eigen::VectorXd x_star = Eigen::VectorXd::Zero(A.cols());
  for (size_t k = 0; k < support.size(); ++k) {
    if (sgn(xt[Index(k)]) != sgn(x_hat[support[k]]))
      throw GenerationError("support cleanup flipped a sign; inner solve too loose");
    x_star[support[k]] = xt[Index(k)];
  }

  ExactInstance inst;
  inst.kind = ModelKind::BasisPursuit;
  inst.A = std::move(p.A_tilde);
  inst.b = b;
  inst.x_star = std::move(x_star);
  inst.lambda_star = lambda_hat;
  inst.d = std::move(p.d);
  inst.kkt = certify(inst);
  if (inst.kkt.max_residual > 1e-10) throw GenerationError("certificate exceeds 1e-10 residual");
  return inst;
}

ExactInstance gen_lasso_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                              double epsilon, const GenBudget& budget) {
  if (!(epsilon > 0.0)) throw InvalidArgument("gen_lasso_exact: epsilon must be positive");
  ExactInstance inst = gen_basis_pursuit_exact(A, x_tilde, budget);
  const double ln = inst.lambda_star.norm();
  if (ln == 0.0) throw GenerationError("zero dual certificate");
  inst.kind = ModelKind::Lasso;
  inst.epsilon = epsilon;
  inst.b = inst.A * inst.x_star + (epsilon / ln) * inst.lambda_star;
  inst.kkt = certify(inst);
  if (inst.kkt.max_residual > 1e-10) throw GenerationError("certificate exceeds 1e-10 residual");
  return inst;
}

ExactInstance gen_dantzig_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                                double delta, double mu, const GenBudget& budget) {
  if (!(delta > 0.0)) throw InvalidArgument("gen_dantzig_exact: delta must be positive");
  if (!(mu > 0.0)) throw InvalidArgument("gen_dantzig_exact: mu must be positive");
  if (A.cols() != x_tilde.size()) throw DimensionError("gen_dantzig_exact: dims mismatch");

  const Index n = A.cols();
  const Eigen::VectorXd b = A * x_tilde;

  ExactInstance inst;
  inst.kind = ModelKind::Dantzig;
  inst.delta = delta;
  inst.mu = mu;
  inst.b = b;
  inst.x0 = Eigen::VectorXd::Zero(n);

  if ((A.transpose() * b).lpNorm<Eigen::Infinity>() <= delta) {
    // Zero is feasible, hence optimal for any mu.
    inst.A = A;
    inst.d = Eigen::VectorXd::Ones(n);
    inst.x_star = Eigen::VectorXd::Zero(n);
    inst.lambda_star = Eigen::VectorXd::Zero(n);
    inst.x_star_unsmoothed = Eigen::VectorXd::Zero(n);
    inst.kkt = certify(inst);
    return inst;
  }

  // High-accuracy solve of the smoothed model at the fixed center x0 = 0.
  ModelSpec spec;
  spec.kind = ModelKind::Dantzig;
  spec.A = make_dense(A);
  spec.y = SpaceElement::from_vector(b);
  spec.delta = delta;
  spec.mu = mu;
  SolverOptions sopts;
  sopts.variant = Variant::AT;
  sopts.restart_interval = budget.restart_interval;
  sopts.max_iters = 4 * budget.inner_max_iters;
  sopts.tol = budget.tol;
  sopts.trace_phi = false;
  SolveResult res = solve(build(spec), sopts, SpaceElement::zeros(Space::real(n)));

  const Eigen::VectorXd& x_hat = res.x.data;
  Eigen::VectorXd z_hat = res.z.data;
  // The dual iterate has geometrically small rather than exactly zero
  // entries off its support; clean it before building the certificate.
  const double z_cut = 1e-7 * z_hat.lpNorm<Eigen::Infinity>();
  for (Index i = 0; i < n; ++i)
    if (std::abs(z_hat[i]) < z_cut) z_hat[i] = 0.0;
  std::vector<Index> z_support = support_of(z_hat);
  if (z_support.empty()) throw GenerationError("smoothed Dantzig solve has an empty dual support");

  const Eigen::VectorXd v_hat = A.transpose() * (b - A * x_hat);
  Eigen::VectorXd targets(Index(z_support.size()));
  for (size_t k = 0; k < z_support.size(); ++k) {
    const Index i = z_support[k];
    if (sgn(v_hat[i]) != -sgn(z_hat[i]) || std::abs(v_hat[i]) < 0.5 * delta)
      throw GenerationError("active-set structure unsettled; inner solve too loose");
    targets[Index(k)] = -delta * sgn(z_hat[i]);
  }
  Perturbation p = make_diagonal_fix(A, v_hat, z_support, targets, delta, 0.99);
  check_d_near_identity(p.d);

  // x_star = D^{-1} x_hat keeps A~ x_star = A x_hat; the proximity center is
  // then chosen to make the primal fixed point exact.
  Eigen::VectorXd x_star = x_hat.cwiseQuotient(p.d);
  Eigen::VectorXd gz = p.A_tilde.transpose() * (p.A_tilde * z_hat);
  const Eigen::VectorXd gz_orig = A.transpose() * (A * z_hat);
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) {
    if (x_star[i] != 0.0) {
      s[i] = sgn(x_star[i]);
    } else {
      // Any strict subgradient works off the support; stay close to the one
      // implied by the unperturbed solve.
      s[i] = std::clamp(mu * inst.x0[i] - gz_orig[i], -0.999, 0.999);
    }
  }
  inst.A = std::move(p.A_tilde);
  inst.d = std::move(p.d);
  inst.x_star = x_star;
  inst.lambda_star = z_hat;
  inst.x0 = x_star + (gz + s) / mu;

  // Unsmoothed solution by re-centered continuation; the exact penalty
  // property terminates it finitely for any fixed mu.
  ModelSpec pert = spec;
  pert.A = make_dense(inst.A);
  ContinuationOptions copts;
  copts.center_rule = CenterRule::Recenter;
  copts.mu_factor = 1.0;
  copts.mu0 = mu;
  copts.inner_tol0 = 1e-4;
  copts.tol_factor = 2.0;
  copts.final_tol = budget.tol;
  copts.max_outer = budget.max_outer;
  copts.outer_tol = 1e-13;
  copts.solver = sopts;
  copts.solver.max_iters = budget.inner_max_iters;
  inst.x_star_unsmoothed = continue_standard(pert, copts).x.data;

  inst.kkt = certify(inst);
  if (inst.kkt.max_residual > 1e-10) throw GenerationError("certificate exceeds 1e-10 residual");
  return inst;
}

KktReport certify(const ExactInstance& inst) {
  KktReport rep;
  const Eigen::MatrixXd& A = inst.A;
  const Eigen::VectorXd& x = inst.x_star;
  const Eigen::VectorXd& lam = inst.lambda_star;

  if (inst.kind == ModelKind::Dantzig) {
    // Smoothed-model optimality at (mu, x0).
    const Eigen::VectorXd v = A.transpose() * (inst.b - A * x);
    rep.primal_residual = std::max(0.0, v.lpNorm<Eigen::Infinity>() - inst.delta);
    double comp = 0.0;
    for (Index i = 0; i < lam.size(); ++i)
      if (lam[i] != 0.0) comp = std::max(comp, std::abs(v[i] + inst.delta * sgn(lam[i])));
    rep.complementarity_residual = comp;
    const Eigen::VectorXd target = inst.x0 - A.transpose() * (A * lam) / inst.mu;
    Eigen::VectorXd x_rec(x.size());
    for (Index i = 0; i < x.size(); ++i) x_rec[i] = soft_threshold(target[i], 1.0 / inst.mu);
    rep.stationarity_residual =
        (x_rec - x).lpNorm<Eigen::Infinity>() / std::max(1.0, x.lpNorm<Eigen::Infinity>());
    rep.max_residual = std::max({rep.primal_residual, rep.complementarity_residual,
                                 rep.stationarity_residual});
    return rep;
  }

  const Eigen::VectorXd g = A.transpose() * lam;
  rep.dual_feasibility_residual = std::max(0.0, g.lpNorm<Eigen::Infinity>() - 1.0);
  double sign_res = 0.0;
  double off_max = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0)
      sign_res = std::max(sign_res, std::abs(g[i] - sgn(x[i])));
    else
      off_max = std::max(off_max, std::abs(g[i]));
  }
  rep.support_sign_residual = sign_res;
  rep.offsupport_margin = 1.0 - off_max;

  if (inst.kind == ModelKind::BasisPursuit) {
    rep.primal_residual = (A * x - inst.b).norm() / std::max(1e-300, inst.b.norm());
    rep.strong_duality_residual = std::abs(inst.b.dot(lam) - x.lpNorm<1>());
  } else {  // Lasso
    const Eigen::VectorXd r = inst.b - A * x;
    rep.primal_residual = std::abs(r.norm() - inst.epsilon);
    const double sd1 = std::abs((A * x).dot(lam) - x.lpNorm<1>());
    const double sd2 = std::abs(r.dot(lam) - inst.epsilon * lam.norm());
    rep.strong_duality_residual = std::max(sd1, sd2);
  }
  rep.max_residual = std::max({rep.primal_residual, rep.dual_feasibility_residual,
                               rep.support_sign_residual, rep.strong_duality_residual});
  return rep;
}

ModelSpec instance_spec(const ExactInstance& inst) {
  ModelSpec spec;
  spec.kind = inst.kind;
  spec.A = make_dense(inst.A);
  spec.a_json = dense_operator_json(inst.A);
  spec.y = SpaceElement::from_vector(inst.b);
  spec.delta = inst.delta;
  spec.epsilon = inst.epsilon;
  spec.mu = inst.mu;
  if (inst.kind == ModelKind::Dantzig && inst.x0.size())
    spec.x0 = SpaceElement::from_vector(inst.x0);
  return spec;
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd json_vec(const json& j) {
  Eigen::VectorXd v(j.size());
  Index i = 0;
  for (const auto& e : j) v[i++] = e.get<double>();
  return v;
}

json kkt_json(const KktReport& k) {
  return json{{"primal_residual", k.primal_residual},
              {"dual_feasibility_residual", k.dual_feasibility_residual},
              {"support_sign_residual", k.support_sign_residual},
              {"offsupport_margin", k.offsupport_margin},
              {"strong_duality_residual", k.strong_duality_residual},
              {"complementarity_residual", k.complementarity_residual},
              {"stationarity_residual", k.stationarity_residual},
              {"max_residual", k.max_residual}};
}

KktReport json_kkt(const json& j) {
  KktReport k;
  k.primal_residual = j.at("primal_residual").get<double>();
  k.dual_feasibility_residual = j.at("dual_feasibility_residual").get<double>();
  k.support_sign_residual = j.at("support_sign_residual").get<double>();
  k.offsupport_margin = j.at("offsupport_margin").get<double>();
  k.strong_duality_residual = j.at("strong_duality_residual").get<double>();
  k.complementarity_residual = j.at("complementarity_residual").get<double>();
  k.stationarity_residual = j.at("stationarity_residual").get<double>();
  k.max_residual = j.at("max_residual").get<double>();
  return k;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const json& j) {
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(Index(j.size()), Index(j.front().size()));
  Index i = 0;
  for (const auto& row : j) {
    Index c = 0;
    for (const auto& e : row) m(i, c++) = e.get<double>();
    ++i;
  }
  return m;
}

}  // namespace

void save_instance_json(const std::string& path, const ExactInstance& inst) {
  json j;
  j["schema"] = "cfm/1";
  json prob;
  prob["kind"] = model_kind_name(inst.kind);
  prob["A"] = json{{"type", "dense"}, {"data", matrix_json(inst.A)}};
  prob["y"] = vec_json(inst.b);
  if (inst.delta != 0.0) prob["delta"] = inst.delta;
  if (inst.epsilon != 0.0) prob["epsilon"] = inst.epsilon;
  if (inst.mu != 0.0) prob["mu"] = inst.mu;
  if (inst.x0.size()) prob["x0"] = vec_json(inst.x0);
  j["problem"] = std::move(prob);
  json cert;
  cert["x_star"] = vec_json(inst.x_star);
  cert["lambda_star"] = vec_json(inst.lambda_star);
  cert["d"] = vec_json(inst.d);
  if (inst.x_star_unsmoothed.size()) cert["x_star_unsmoothed"] = vec_json(inst.x_star_unsmoothed);
  cert["kkt"] = kkt_json(inst.kkt);
  j["certificate"] = std::move(cert);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

ExactInstance load_instance_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance bundle '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse '" + path + "': " + e.what());
  }
  if (j.value("schema", "") != "cfm/1") throw IoError("instance bundle schema must be \"cfm/1\"");
  const json& prob = j.at("problem");
  const json& cert = j.at("certificate");
  ExactInstance inst;
  inst.kind = model_kind_from_name(prob.at("kind").get<std::string>());
  inst.A = json_matrix(prob.at("A").at("data"));
  inst.b = json_vec(prob.at("y"));
  inst.delta = prob.value("delta", 0.0);
  inst.epsilon = prob.value("epsilon", 0.0);
  inst.mu = prob.value("mu", 0.0);
  if (prob.contains("x0")) inst.x0 = json_vec(prob.at("x0"));
  inst.x_star = json_vec(cert.at("x_star"));
  inst.lambda_star = json_vec(cert.at("lambda_star"));
  inst.d = json_vec(cert.at("d"));
  if (cert.contains("x_star_unsmoothed")) inst.x_star_unsmoothed = json_vec(cert.at("x_star_unsmoothed"));
  inst.kkt = json_kkt(cert.at("kkt"));
  return inst;
}

}  // namespace cfm
