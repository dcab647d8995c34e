#pragma once

#include <string>
#include <vector>

#include "cfm/linops.hpp"
#include "cfm/smoothing.hpp"
#include "cfm/space.hpp"

namespace cfm {

enum class ModelKind {
  Dantzig,
  DantzigLp,
  Lasso,
  BasisPursuit,
  NuclearLasso,
  NuclearDantzig,
  L1Analysis,
  Tv,
  AnalysisPlusTv,
};

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

//! Problem description binding data, operators and parameters to one of the
//! supported recovery models. Only the parameters a kind uses are read.
struct ModelSpec {
  ModelKind kind = ModelKind::Lasso;
  LinOp A;
  LinOp W;  //!< analysis operator (L1Analysis / AnalysisPlusTv)
  SpaceElement y;
  double delta = 0.0;
  double epsilon = 0.0;
  double alpha_w = 1.0;  //!< weight of the ||Wx||_1 term (AnalysisPlusTv)
  double beta_tv = 1.0;  //!< weight of the TV term (AnalysisPlusTv)
  double mu = 0.0;
  SpaceElement x0;                   //!< proximity center; empty = zeros
  std::vector<double> block_ratios;  //!< per-block dual step ratios; empty = defaults

  //! JSON payloads describing A / W, kept so the ModelSpec can be re-serialized.
  //! Set by load_problem_json and by code that builds specs from payloads.
  std::string a_json;
  std::string w_json;

  void validate() const;
};

//! Inline JSON payload for a dense operator (for ModelSpec::a_json / w_json).
std::string dense_operator_json(const Eigen::MatrixXd& m);

//! Conic standard form of the (unsmoothed) model; shared by the smoothed
//! builders and the duality-gap computation.
ConicModel conic_model(const ModelSpec& spec);

//! Smoothed composite dual of the model at spec.mu and spec.x0.
CompositeDual build(const ModelSpec& spec);

CompositeDual build_dantzig(const ModelSpec& spec);
CompositeDual build_dantzig_lp(const ModelSpec& spec);
CompositeDual build_lasso(const ModelSpec& spec);
CompositeDual build_basis_pursuit(const ModelSpec& spec);
CompositeDual build_nuclear_lasso(const ModelSpec& spec);
CompositeDual build_nuclear_dantzig(const ModelSpec& spec);
CompositeDual build_l1_analysis(const ModelSpec& spec);
CompositeDual build_tv(const ModelSpec& spec);
CompositeDual build_analysis_plus_tv(const ModelSpec& spec);

//! Objective value of the unsmoothed model at x.
double objective_value(const ModelSpec& spec, const SpaceElement& x);

struct FeasibilityReport {
  double residual = 0.0;  //!< value of the data-fit functional at x
  double bound = 0.0;     //!< the model's delta / epsilon
  double violation = 0.0;
};

//! Data-fit residual of the model constraint at x.
FeasibilityReport feasibility(const ModelSpec& spec, const SpaceElement& x);

//! One reweighting step: replaces W by R W with R_ii = 1 / (|(W x_prev)_i| + eps_w).
//! Lasso / basis-pursuit specs are lifted to the analysis form with W = R.
ModelSpec reweight(const ModelSpec& spec, const SpaceElement& x_prev, double eps_w);

//! Smoothing heuristic mu = 0.1 ||W x_LS||_2 / (0.5 ||x_LS||^2) with x_LS the
//! least-squares solution of A x = y (conjugate gradient on the normal
//! equations to relative tolerance 1e-8).
double default_mu(const ModelSpec& spec);

//! Problem-file serialization (schema "cfm/1"). Relative operator file
//! references are resolved against the JSON file's directory.
ModelSpec load_problem_json(const std::string& path);
void save_problem_json(const std::string& path, const ModelSpec& spec);

}  // namespace cfm
