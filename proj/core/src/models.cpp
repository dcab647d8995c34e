#include "cfm/models.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cfm/errors.hpp"
#include "cfm/matrix_io.hpp"
#include "cfm/random.hpp"

namespace cfm {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Dantzig: return "dantzig";
    case ModelKind::DantzigLp: return "dantzig_lp";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::BasisPursuit: return "basis_pursuit";
    case ModelKind::NuclearLasso: return "nuclear_lasso";
    case ModelKind::NuclearDantzig: return "nuclear_dantzig";
    case ModelKind::L1Analysis: return "l1_analysis";
    case ModelKind::Tv: return "tv";
    case ModelKind::AnalysisPlusTv: return "analysis_plus_tv";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  for (ModelKind k :
       {ModelKind::Dantzig, ModelKind::DantzigLp, ModelKind::Lasso, ModelKind::BasisPursuit,
        ModelKind::NuclearLasso, ModelKind::NuclearDantzig, ModelKind::L1Analysis, ModelKind::Tv,
        ModelKind::AnalysisPlusTv})
    if (name == model_kind_name(k)) return k;
  throw InvalidArgument("unknown model kind '" + name + "'");
}

namespace {

bool uses_analysis_w(ModelKind k) {
  return k == ModelKind::L1Analysis || k == ModelKind::AnalysisPlusTv;
}

bool is_nuclear(ModelKind k) {
  return k == ModelKind::NuclearLasso || k == ModelKind::NuclearDantzig;
}

bool is_tv(ModelKind k) { return k == ModelKind::Tv || k == ModelKind::AnalysisPlusTv; }

double safe_ratio(double num, double den) {
  if (!(num > 0.0) || !(den > 0.0)) return 1.0;
  return (num * num) / (den * den);
}

}  // namespace

void ModelSpec::validate() const {
  if (!A.valid()) throw InvalidArgument("ModelSpec: measurement operator A is required");
  check_same_space(y.space, A.output_space(), "ModelSpec: data y");
  if (x0.data.size()) check_same_space(x0.space, A.input_space(), "ModelSpec: center x0");
  if (delta < 0.0) throw InvalidArgument("ModelSpec: delta must be nonnegative");
  if (epsilon < 0.0) throw InvalidArgument("ModelSpec: epsilon must be nonnegative");
  if (alpha_w < 0.0 || beta_tv < 0.0) throw InvalidArgument("ModelSpec: weights must be nonnegative");
  if (uses_analysis_w(kind)) {
    if (!W.valid()) throw InvalidArgument("ModelSpec: analysis operator W is required for this kind");
    check_same_space(W.input_space(), A.input_space(), "ModelSpec: W input");
  }
  if (is_nuclear(kind) && A.input_space().kind() != Space::Kind::Matrix)
    throw InvalidArgument("ModelSpec: nuclear models need a matrix-valued primal space");
  if (is_tv(kind)) {
    const Space& in = A.input_space();
    if (in.kind() != Space::Kind::Matrix || in.rows() != in.cols() || in.rows() < 2)
      throw InvalidArgument("ModelSpec: TV models need a square n x n image space with n >= 2");
  }
}

ConicModel conic_model(const ModelSpec& spec) {
  spec.validate();
  ConicModel model;
  model.primal_space = spec.A.input_space();
  const LinOp& A = spec.A;
  const SpaceElement& y = spec.y;

  auto soc_or_equality = [&](double eps) -> ConeBlock {
    ConeBlock b;
    if (eps > 0.0) {
      b.kind = ConeBlock::Kind::SocEpi;
      b.op = scale(A, -1.0);
      b.offset = y;
      b.bound = eps;
    } else {
      // eps = 0 routes to the equality-constrained (basis pursuit) form with
      // a linear h.
      b.kind = ConeBlock::Kind::Zero;
      b.op = A;
      b.h_linear = SpaceElement(y.space, -y.data);
    }
    return b;
  };

  switch (spec.kind) {
    case ModelKind::Dantzig: {
      model.objective = ObjectiveKind::L1;
      LinOp G = compose(adjoint_op(A), A);
      ConeBlock b;
      if (spec.delta > 0.0) {
        b.kind = ConeBlock::Kind::LinfEpi;
        b.op = scale(G, -1.0);
        b.offset = A.adjoint(y);
        b.bound = spec.delta;
      } else {
        b.kind = ConeBlock::Kind::Zero;
        b.op = G;
        SpaceElement aty = A.adjoint(y);
        b.h_linear = SpaceElement(aty.space, -aty.data);
      }
      model.blocks.push_back(std::move(b));
      break;
    }
    case ModelKind::DantzigLp: {
      model.objective = ObjectiveKind::L1;
      LinOp G = compose(adjoint_op(A), A);
      SpaceElement aty = A.adjoint(y);
      ConeBlock b;
      b.kind = ConeBlock::Kind::Nonneg;
      b.op = stack({scale(G, -1.0), G});
      b.offset = concat({aty, SpaceElement(aty.space, -aty.data)});
      SpaceElement ones(b.op.output_space(),
                        Eigen::VectorXd::Constant(b.op.output_space().real_dim(), spec.delta));
      b.h_linear = std::move(ones);
      model.blocks.push_back(std::move(b));
      break;
    }
    case ModelKind::Lasso:
    case ModelKind::BasisPursuit: {
      model.objective = ObjectiveKind::L1;
      const double eps = spec.kind == ModelKind::BasisPursuit ? 0.0 : spec.epsilon;
      model.blocks.push_back(soc_or_equality(eps));
      break;
    }
    case ModelKind::NuclearLasso: {
      model.objective = ObjectiveKind::Nuclear;
      model.blocks.push_back(soc_or_equality(spec.epsilon));
      break;
    }
    case ModelKind::NuclearDantzig: {
      model.objective = ObjectiveKind::Nuclear;
      LinOp G = compose(adjoint_op(A), A);
      ConeBlock b;
      b.kind = ConeBlock::Kind::OpNormEpi;
      b.op = scale(G, -1.0);
      b.offset = A.adjoint(y);
      b.bound = spec.delta;
      model.blocks.push_back(std::move(b));
      break;
    }
    case ModelKind::L1Analysis: {
      model.objective = ObjectiveKind::Zero;
      ConeBlock w;
      w.kind = ConeBlock::Kind::L1EpiObjective;
      w.op = spec.W;
      w.bound = 1.0;
      ConeBlock r = soc_or_equality(spec.epsilon);
      if (!spec.block_ratios.empty()) {
        if (spec.block_ratios.size() != 2)
          throw InvalidArgument("ModelSpec: l1_analysis expects 2 block ratios");
        w.step_ratio = spec.block_ratios[0];
        r.step_ratio = spec.block_ratios[1];
      } else {
        r.step_ratio = safe_ratio(estimate_norm(spec.W), estimate_norm(A));
      }
      model.blocks.push_back(std::move(w));
      model.blocks.push_back(std::move(r));
      break;
    }
    case ModelKind::Tv: {
      model.objective = ObjectiveKind::Zero;
      LinOp D = make_diff2d(spec.A.input_space().rows());
      ConeBlock d;
      d.kind = ConeBlock::Kind::CL1EpiObjective;
      d.op = D;
      d.bound = 1.0;
      ConeBlock r = soc_or_equality(spec.epsilon);
      if (!spec.block_ratios.empty()) {
        if (spec.block_ratios.size() != 2) throw InvalidArgument("ModelSpec: tv expects 2 block ratios");
        d.step_ratio = spec.block_ratios[0];
        r.step_ratio = spec.block_ratios[1];
      } else {
        r.step_ratio = safe_ratio(estimate_norm(D), estimate_norm(A));
      }
      model.blocks.push_back(std::move(d));
      model.blocks.push_back(std::move(r));
      break;
    }
    case ModelKind::AnalysisPlusTv: {
      model.objective = ObjectiveKind::Zero;
      LinOp D = make_diff2d(spec.A.input_space().rows());
      ConeBlock w;
      w.kind = ConeBlock::Kind::L1EpiObjective;
      w.op = spec.W;
      w.bound = spec.alpha_w;
      ConeBlock d;
      d.kind = ConeBlock::Kind::CL1EpiObjective;
      d.op = D;
      d.bound = spec.beta_tv;
      ConeBlock r = soc_or_equality(spec.epsilon);
      if (!spec.block_ratios.empty()) {
        if (spec.block_ratios.size() != 3)
          throw InvalidArgument("ModelSpec: analysis_plus_tv expects 3 block ratios");
        w.step_ratio = spec.block_ratios[0];
        d.step_ratio = spec.block_ratios[1];
        r.step_ratio = spec.block_ratios[2];
      } else {
        const double nw = estimate_norm(spec.W);
        d.step_ratio = safe_ratio(nw, estimate_norm(D));
        r.step_ratio = safe_ratio(nw, estimate_norm(A));
      }
      model.blocks.push_back(std::move(w));
      model.blocks.push_back(std::move(d));
      model.blocks.push_back(std::move(r));
      break;
    }
  }
  return model;
}

CompositeDual build(const ModelSpec& spec) {
  ConicModel model = conic_model(spec);
  SpaceElement x0 = spec.x0.data.size() ? spec.x0 : SpaceElement::zeros(model.primal_space);
  return smooth(model, spec.mu, x0);
}

namespace {

CompositeDual build_checked(const ModelSpec& spec, ModelKind expected) {
  if (spec.kind != expected)
    throw InvalidArgument(std::string("builder called with kind '") + model_kind_name(spec.kind) +
                          "', expected '" + model_kind_name(expected) + "'");
  return build(spec);
}

}  // namespace

CompositeDual build_dantzig(const ModelSpec& s) { return build_checked(s, ModelKind::Dantzig); }
CompositeDual build_dantzig_lp(const ModelSpec& s) { return build_checked(s, ModelKind::DantzigLp); }
CompositeDual build_lasso(const ModelSpec& s) { return build_checked(s, ModelKind::Lasso); }
CompositeDual build_basis_pursuit(const ModelSpec& s) {
  return build_checked(s, ModelKind::BasisPursuit);
}
CompositeDual build_nuclear_lasso(const ModelSpec& s) {
  return build_checked(s, ModelKind::NuclearLasso);
}
CompositeDual build_nuclear_dantzig(const ModelSpec& s) {
  return build_checked(s, ModelKind::NuclearDantzig);
}
CompositeDual build_l1_analysis(const ModelSpec& s) { return build_checked(s, ModelKind::L1Analysis); }
CompositeDual build_tv(const ModelSpec& s) { return build_checked(s, ModelKind::Tv); }
CompositeDual build_analysis_plus_tv(const ModelSpec& s) {
  return build_checked(s, ModelKind::AnalysisPlusTv);
}

double objective_value(const ModelSpec& spec, const SpaceElement& x) {
  return model_objective(conic_model(spec), x);
}

FeasibilityReport feasibility(const ModelSpec& spec, const SpaceElement& x) {
  spec.validate();
  FeasibilityReport rep;
  SpaceElement ax = spec.A.forward(x);
  switch (spec.kind) {
    case ModelKind::Dantzig:
    case ModelKind::DantzigLp:
      rep.residual = spec.A.adjoint(SpaceElement(ax.space, spec.y.data - ax.data))
                         .data.lpNorm<Eigen::Infinity>();
      rep.bound = spec.delta;
      break;
    case ModelKind::NuclearDantzig: {
      SpaceElement g = spec.A.adjoint(SpaceElement(ax.space, spec.y.data - ax.data));
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.as_matrix());
      rep.residual = svd.singularValues()[0];
      rep.bound = spec.delta;
      break;
    }
    case ModelKind::BasisPursuit:
      rep.residual = (ax.data - spec.y.data).norm();
      rep.bound = 0.0;
      break;
    default:
      rep.residual = (spec.y.data - ax.data).norm();
      rep.bound = spec.epsilon;
      break;
  }
  rep.violation = std::max(0.0, rep.residual - rep.bound);
  return rep;
}

ModelSpec reweight(const ModelSpec& spec, const SpaceElement& x_prev, double eps_w) {
  if (!(eps_w > 0.0)) throw InvalidArgument("reweight: eps_w must be positive");
  ModelSpec out = spec;
  LinOp w_cur;
  switch (spec.kind) {
    case ModelKind::Lasso:
    case ModelKind::BasisPursuit:
      w_cur = make_identity(spec.A.input_space());
      out.kind = ModelKind::L1Analysis;
      out.epsilon = spec.kind == ModelKind::BasisPursuit ? 0.0 : spec.epsilon;
      break;
    case ModelKind::L1Analysis:
    case ModelKind::AnalysisPlusTv:
      w_cur = spec.W;
      break;
    default:
      throw InvalidArgument("reweight: model kind has no l1-analysis term");
  }
  check_same_space(x_prev.space, spec.A.input_space(), "reweight: x_prev");
  SpaceElement wx = w_cur.forward(x_prev);
  Eigen::VectorXd r = (wx.data.array().abs() + eps_w).inverse();
  out.W = compose(make_diag(r), w_cur);
  out.block_ratios.clear();  // ratios depend on ||W||; recomputed at build
  return out;
}

namespace {

// Matrix-free conjugate gradient for an SPD apply; relative-residual stop.
Eigen::VectorXd conjugate_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                   const Eigen::VectorXd& rhs, double tol, int max_iters) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  const double stop = tol * tol * rhs.squaredNorm();
  for (int it = 0; it < max_iters && rs > stop; ++it) {
    Eigen::VectorXd ap = apply(p);
    const double denom = p.dot(ap);
    if (denom <= 0.0) throw NumericalError("conjugate gradient: operator not positive definite");
    const double a = rs / denom;
    x += a * p;
    r -= a * ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  return x;
}

}  // namespace

double default_mu(const ModelSpec& spec) {
  spec.validate();
  if (spec.y.data.norm() == 0.0) throw InvalidArgument("default_mu: zero data vector is degenerate");
  const LinOp& A = spec.A;
  const Index m = A.output_space().real_dim();
  const Index n = A.input_space().real_dim();
  const Space& in = A.input_space();
  const Space& out = A.output_space();

  Eigen::VectorXd xls;
  const int max_iters = 10 * int(std::max(m, n)) + 50;
  if (m <= n) {
    // Minimum-norm solution x = A^T (A A^T)^{-1} y.
    auto apply = [&](const Eigen::VectorXd& u) {
      return A.forward(A.adjoint(SpaceElement(out, u))).data;
    };
    Eigen::VectorXd u = conjugate_gradient(apply, spec.y.data, 1e-8, max_iters);
    xls = A.adjoint(SpaceElement(out, u)).data;
  } else {
    auto apply = [&](const Eigen::VectorXd& v) {
      return A.adjoint(A.forward(SpaceElement(in, v))).data;
    };
    Eigen::VectorXd rhs = A.adjoint(spec.y).data;
    xls = conjugate_gradient(apply, rhs, 1e-8, max_iters);
  }

  double w_norm;
  if (uses_analysis_w(spec.kind) && spec.W.valid()) {
    w_norm = spec.W.forward(SpaceElement(in, xls)).data.norm();
  } else {
    w_norm = xls.norm();
  }
  const double denom = 0.5 * xls.squaredNorm();
  if (denom == 0.0) throw InvalidArgument("default_mu: least-squares solution is zero");
  return 0.1 * w_norm / denom;
}

// ---- problem-file serialization ------------------------------------------

namespace {

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  Index i = 0;
  for (const auto& e : j) v[i++] = e.get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(Index(j.size()), Index(j.front().size()));
  Index i = 0;
  for (const auto& row : j) {
    if (Index(row.size()) != m.cols()) throw IoError("ragged matrix in problem file");
    Index k = 0;
    for (const auto& e : row) m(i, k++) = e.get<double>();
    ++i;
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

SpaceElement element_from_json(const json& j) {
  if (j.is_array()) return SpaceElement::from_vector(vector_from_json(j));
  if (j.is_object() && j.contains("rows") && j.contains("data")) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    Eigen::VectorXd flat = vector_from_json(j.at("data"));
    if (flat.size() != rows * cols) throw IoError("element dims do not match data length");
    return SpaceElement(Space::matrix(rows, cols), std::move(flat));
  }
  throw IoError("cannot parse space element from problem file");
}

json element_to_json(const SpaceElement& e) {
  if (e.space.kind() == Space::Kind::Matrix) {
    json j;
    j["rows"] = e.space.rows();
    j["cols"] = e.space.cols();
    j["data"] = vector_to_json(e.data);
    return j;
  }
  return vector_to_json(e.data);
}

LinOp op_from_json(const json& j, const std::filesystem::path& base) {
  const std::string type = j.at("type").get<std::string>();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  if (type == "dense") {
    if (j.contains("data")) return make_dense(matrix_from_json(j.at("data")));
    if (j.contains("csv")) return make_dense(load_matrix_csv(resolve(j.at("csv").get<std::string>())));
    if (j.contains("cfm")) return make_dense(load_matrix_cfm(resolve(j.at("cfm").get<std::string>())));
    throw IoError("dense operator needs one of data/csv/cfm");
  }
  if (type == "identity") {
    if (j.contains("rows")) return make_identity(Space::matrix(j.at("rows").get<Index>(), j.at("cols").get<Index>()));
    return make_identity(Space::real(j.at("n").get<Index>()));
  }
  if (type == "partial_dct") {
    std::vector<Index> rows;
    for (const auto& r : j.at("rows")) rows.push_back(r.get<Index>());
    return make_partial_dct(rows, j.at("n").get<Index>());
  }
  if (type == "subsample") {
    std::vector<std::pair<Index, Index>> entries;
    for (const auto& e : j.at("entries")) entries.emplace_back(e.at(0).get<Index>(), e.at(1).get<Index>());
    return make_subsample(entries, j.at("rows").get<Index>(), j.at("cols").get<Index>());
  }
  if (type == "gaussian") {
    const Index m = j.at("m").get<Index>();
    const Index n = j.at("n").get<Index>();
    const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
    auto rng = make_rng(seed);
    return make_dense(gaussian_matrix(m, n, rng));
  }
  if (type == "diff2d") return make_diff2d(j.at("n").get<Index>());
  throw IoError("unknown operator type '" + type + "'");
}

}  // namespace

std::string dense_operator_json(const Eigen::MatrixXd& m) {
  json j;
  j["type"] = "dense";
  j["data"] = matrix_to_json(m);
  return j.dump();
}

ModelSpec load_problem_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse '" + path + "': " + e.what());
  }
  if (j.value("schema", "") != "cfm/1") throw IoError("problem file schema must be \"cfm/1\"");
  const auto base = std::filesystem::path(path).parent_path();

  ModelSpec spec;
  spec.kind = model_kind_from_name(j.at("kind").get<std::string>());
  spec.A = op_from_json(j.at("A"), base);
  if (j.contains("W")) spec.W = op_from_json(j.at("W"), base);
  spec.y = element_from_json(j.at("y"));
  spec.delta = j.value("delta", 0.0);
  spec.epsilon = j.value("epsilon", 0.0);
  spec.alpha_w = j.value("alpha_w", 1.0);
  spec.beta_tv = j.value("beta_tv", 1.0);
  spec.mu = j.value("mu", 0.0);
  if (j.contains("x0")) spec.x0 = element_from_json(j.at("x0"));
  if (j.contains("block_ratios"))
    for (const auto& r : j.at("block_ratios")) spec.block_ratios.push_back(r.get<double>());
  spec.a_json = j.at("A").dump();
  if (j.contains("W")) spec.w_json = j.at("W").dump();
  spec.validate();
  return spec;
}

void save_problem_json(const std::string& path, const ModelSpec& spec) {
  if (spec.a_json.empty())
    throw IoError("save_problem_json: operator A has no serializable payload");
  json j;
  j["schema"] = "cfm/1";
  j["kind"] = model_kind_name(spec.kind);
  j["A"] = json::parse(spec.a_json);
  if (!spec.w_json.empty()) j["W"] = json::parse(spec.w_json);
  j["y"] = element_to_json(spec.y);
  if (spec.delta != 0.0) j["delta"] = spec.delta;
  if (spec.epsilon != 0.0) j["epsilon"] = spec.epsilon;
  if (spec.alpha_w != 1.0) j["alpha_w"] = spec.alpha_w;
  if (spec.beta_tv != 1.0) j["beta_tv"] = spec.beta_tv;
  if (spec.mu != 0.0) j["mu"] = spec.mu;
  if (spec.x0.data.size()) j["x0"] = element_to_json(spec.x0);
  if (!spec.block_ratios.empty()) j["block_ratios"] = spec.block_ratios;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace cfm
