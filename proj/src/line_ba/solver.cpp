#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "linesfm/line_ba.hpp"

namespace linesfm {

std::string SolverReport::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iter,cost,damping,grad_norm,step_norm\n";
  for (const auto& r : iterations) {
    out << r.iter << ',' << r.cost << ',' << r.damping << ',' << r.grad_norm << ',' << r.step_norm << '\n';
  }
  return out.str();
}

namespace {

struct Layout {
  std::vector<int> pose_offset;  // -1 for gauge poses
  int pose_dims = 0;
  // Landmark slots: points first, then lines. Inactive terms get no slot.
  int num_points = 0;
  int num_lines = 0;

  int PointSlot(int i) const { return i; }
  int LineSlot(int i) const { return num_points + i; }
  int SlotCount() const { return num_points + num_lines; }
};

Layout MakeLayout(const BAProblem& p) {
  Layout layout;
  layout.pose_offset.assign(p.poses.size(), -1);
  for (int v = 0; v < static_cast<int>(p.poses.size()); ++v) {
    if (p.gauge.count(v)) continue;
    layout.pose_offset[v] = layout.pose_dims;
    layout.pose_dims += 6;
  }
  layout.num_points = p.lambda_R > 0 ? static_cast<int>(p.points.size()) : 0;
  layout.num_lines = p.lambda_L > 0 ? static_cast<int>(p.lines.size()) : 0;
  return layout;
}

struct NormalEquations {
  Eigen::MatrixXd Hpp;
  Eigen::VectorXd gp;
  std::vector<Eigen::MatrixXd> Hll;
  std::vector<Eigen::VectorXd> gl;
  std::vector<Eigen::MatrixXd> Hpl;

  double GradientNorm() const {
    double g = gp.size() ? gp.cwiseAbs().maxCoeff() : 0.0;
    for (const auto& v : gl) g = std::max(g, v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
    return g;
  }
};

NormalEquations BuildNormalEquations(const BAProblem& p, const Layout& layout, const SolverConfig& cfg) {
  NormalEquations ne;
  ne.Hpp = Eigen::MatrixXd::Zero(layout.pose_dims, layout.pose_dims);
  ne.gp = Eigen::VectorXd::Zero(layout.pose_dims);
  const int slots = layout.SlotCount();
  ne.Hll.resize(slots);
  ne.gl.resize(slots);
  ne.Hpl.resize(slots);
  for (int s = 0; s < slots; ++s) {
    const int k = s < layout.num_points ? 3 : 4;
    ne.Hll[s] = Eigen::MatrixXd::Zero(k, k);
    ne.gl[s] = Eigen::VectorXd::Zero(k);
    ne.Hpl[s] = Eigen::MatrixXd::Zero(layout.pose_dims, k);
  }

  for (const ResidualBlock& b : Jacobians(p)) {
    const bool is_point = b.kind == ResidualBlock::Kind::kPoint;
    double w = is_point ? p.lambda_R : p.lambda_L;
    if (cfg.loss == LossType::kHuber) {
      const double norm = b.residual.norm();
      if (norm > cfg.huber_delta) w *= cfg.huber_delta / norm;
    }
    const int slot = is_point ? layout.PointSlot(b.landmark) : layout.LineSlot(b.landmark);
    const Eigen::MatrixXd& Jl = b.J_landmark;
    ne.Hll[slot].noalias() += w * Jl.transpose() * Jl;
    ne.gl[slot].noalias() += w * Jl.transpose() * b.residual;
    const int off = layout.pose_offset[b.view];
    if (off >= 0) {
      ne.Hpp.block<6, 6>(off, off).noalias() += w * b.J_pose.transpose() * b.J_pose;
      ne.gp.segment<6>(off).noalias() += w * b.J_pose.transpose() * b.residual;
      ne.Hpl[slot].middleRows(off, 6).noalias() += w * b.J_pose.transpose() * Jl;
    }
  }
  return ne;
}

Eigen::VectorXd DampedDiagonal(const Eigen::VectorXd& diag, double damping) {
  return damping * diag.cwiseMax(1e-6).cwiseMin(1e32);
}

// Returns false when the damped system is not positive definite.
bool SolveSchur(const NormalEquations& ne, double damping, Eigen::VectorXd* dp, std::vector<Eigen::VectorXd>* dl) {
  const int np = static_cast<int>(ne.gp.size());
  Eigen::MatrixXd S = ne.Hpp;
  S.diagonal() += DampedDiagonal(ne.Hpp.diagonal(), damping);
  Eigen::VectorXd rhs = -ne.gp;
  std::vector<Eigen::MatrixXd> Hll_inv(ne.Hll.size());
  for (std::size_t s = 0; s < ne.Hll.size(); ++s) {
    Eigen::MatrixXd H = ne.Hll[s];
    H.diagonal() += DampedDiagonal(ne.Hll[s].diagonal(), damping);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return false;
    Hll_inv[s] = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
    if (np > 0) {
      const Eigen::MatrixXd W = ne.Hpl[s] * Hll_inv[s];
      S.noalias() -= W * ne.Hpl[s].transpose();
      rhs.noalias() += W * ne.gl[s];
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(np);
  if (np > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return false;
    x = llt.solve(rhs);
  }
  dl->resize(ne.Hll.size());
  for (std::size_t s = 0; s < ne.Hll.size(); ++s) {
    Eigen::VectorXd r = -ne.gl[s];
    if (np > 0) r.noalias() -= ne.Hpl[s].transpose() * x;
    (*dl)[s] = Hll_inv[s] * r;
  }
  *dp = std::move(x);
  if (!dp->allFinite()) return false;
  return std::all_of(dl->begin(), dl->end(), [](const Eigen::VectorXd& v) { return v.allFinite(); });
}

bool SolveDense(const NormalEquations& ne, double damping, Eigen::VectorXd* dp, std::vector<Eigen::VectorXd>* dl) {
  const int np = static_cast<int>(ne.gp.size());
  std::vector<int> offset(ne.Hll.size());
  int n = np;
  for (std::size_t s = 0; s < ne.Hll.size(); ++s) {
    offset[s] = n;
    n += static_cast<int>(ne.Hll[s].rows());
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g(n);
  H.topLeftCorner(np, np) = ne.Hpp;
  g.head(np) = ne.gp;
  for (std::size_t s = 0; s < ne.Hll.size(); ++s) {
    const int k = static_cast<int>(ne.Hll[s].rows());
    H.block(offset[s], offset[s], k, k) = ne.Hll[s];
    H.block(0, offset[s], np, k) = ne.Hpl[s];
    H.block(offset[s], 0, k, np) = ne.Hpl[s].transpose();
    g.segment(offset[s], k) = ne.gl[s];
  }
  H.diagonal() += DampedDiagonal(H.diagonal(), damping);
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd x = llt.solve(-g);
  *dp = x.head(np);
  dl->resize(ne.Hll.size());
  for (std::size_t s = 0; s < ne.Hll.size(); ++s) (*dl)[s] = x.segment(offset[s], ne.Hll[s].rows());
  return x.allFinite();
}

BAProblem ApplyStep(const BAProblem& p, const Layout& layout, const Eigen::VectorXd& dp,
                    const std::vector<Eigen::VectorXd>& dl) {
  BAProblem out = p;
  for (int v = 0; v < static_cast<int>(p.poses.size()); ++v) {
    const int off = layout.pose_offset[v];
    if (off < 0) continue;
    out.poses[v] = p.poses[v].Retract(dp.segment<3>(off), dp.segment<3>(off + 3));
  }
  for (int i = 0; i < layout.num_points; ++i) out.points[i].position += dl[layout.PointSlot(i)];
  for (int i = 0; i < layout.num_lines; ++i) {
    out.lines[i].line = OrthonormalUpdate(p.lines[i].line, Vec4(dl[layout.LineSlot(i)]));
  }
  return out;
}

double SafeCost(const BAProblem& p, const SolverConfig& cfg) {
  try {
    return TotalCost(p, cfg.loss, cfg.huber_delta);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Removes observations that cannot be evaluated at the initial estimate.
int DropInvalidObservations(BAProblem& p) {
  int dropped = 0;
  for (auto& X : p.points) {
    std::vector<PointObservation> keep;
    for (const auto& o : X.observations) {
      try {
        PointResidual(X, o, p.K, p.poses);
        keep.push_back(o);
      } catch (const Error& e) {
        ++dropped;
        spdlog::warn("dropping point observation in view {}: {}", o.view, e.what());
      }
    }
    X.observations = std::move(keep);
  }
  for (auto& L : p.lines) {
    std::vector<LineObservation> keep;
    for (const auto& o : L.observations) {
      try {
        LineResidual(L, o, p.K, p.poses);
        keep.push_back(o);
      } catch (const Error& e) {
        ++dropped;
        spdlog::warn("dropping line observation in view {}: {}", o.view, e.what());
      }
    }
    L.observations = std::move(keep);
  }
  return dropped;
}

}  // namespace

LinearSolveCheck CompareLinearSolves(const BAProblem& p, double damping) {
  const Layout layout = MakeLayout(p);
  const NormalEquations ne = BuildNormalEquations(p, layout, SolverConfig{});
  auto flatten = [](const Eigen::VectorXd& dp, const std::vector<Eigen::VectorXd>& dl) {
    int n = static_cast<int>(dp.size());
    for (const auto& v : dl) n += static_cast<int>(v.size());
    Eigen::VectorXd x(n);
    x.head(dp.size()) = dp;
    int off = static_cast<int>(dp.size());
    for (const auto& v : dl) {
      x.segment(off, v.size()) = v;
      off += static_cast<int>(v.size());
    }
    return x;
  };
  LinearSolveCheck out;
  Eigen::VectorXd dp;
  std::vector<Eigen::VectorXd> dl;
  if (!SolveSchur(ne, damping, &dp, &dl)) Throw(ErrorCode::kSingularNormalEquations, "Schur solve failed");
  out.schur = flatten(dp, dl);
  if (!SolveDense(ne, damping, &dp, &dl)) Throw(ErrorCode::kSingularNormalEquations, "dense solve failed");
  out.dense = flatten(dp, dl);
  return out;
}

OptimizeResult Optimize(const BAProblem& input, const SolverConfig& cfg) {
  cfg.Validate();
  input.Validate();
  if (input.gauge.empty()) Throw(ErrorCode::kInvalidArgument, "at least one pose must be gauge-fixed");

  OptimizeResult result{input, {}};
  SolverReport& report = result.report;
  if (cfg.max_iters == 0) {
    report.initial_cost = report.final_cost = SafeCost(input, cfg);
    report.termination = "max_iters";
    return result;
  }

  BAProblem state = input;
  report.dropped_observations = DropInvalidObservations(state);
  const Layout layout = MakeLayout(state);
  double cost = TotalCost(state, cfg.loss, cfg.huber_delta);
  report.initial_cost = cost;
  double damping = cfg.initial_damping;
  report.termination = "max_iters";

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    report.iterations_run = iter + 1;
    if (cost <= cfg.absolute_cost_tolerance) {
      report.termination = "absolute_cost";
      break;
    }
    const NormalEquations ne = BuildNormalEquations(state, layout, cfg);
    const double grad_norm = ne.GradientNorm();
    if (grad_norm < cfg.gradient_tolerance) {
      report.iterations.push_back({iter, cost, damping, grad_norm, 0.0, false});
      report.termination = "gradient";
      break;
    }

    bool accepted = false;
    double rel_decrease = 0.0;
    while (!accepted) {
      Eigen::VectorXd dp;
      std::vector<Eigen::VectorXd> dl;
      const bool ok = cfg.use_schur ? SolveSchur(ne, damping, &dp, &dl) : SolveDense(ne, damping, &dp, &dl);
      if (!ok) {
        damping *= cfg.damping_up;
        if (damping > 1e32) {
          Throw(ErrorCode::kSingularNormalEquations,
                "normal equations stayed singular at iteration " + std::to_string(iter));
        }
        continue;
      }
      double step_sq = dp.squaredNorm();
      for (const auto& v : dl) step_sq += v.squaredNorm();
      const double step_norm = std::sqrt(step_sq);

      BAProblem candidate = ApplyStep(state, layout, dp, dl);
      const double new_cost = SafeCost(candidate, cfg);
      IterationRecord rec{iter, std::min(cost, new_cost), damping, grad_norm, step_norm, new_cost < cost};
      report.iterations.push_back(rec);
      if (new_cost < cost) {
        rel_decrease = (cost - new_cost) / cost;
        state = std::move(candidate);
        cost = new_cost;
        damping = std::max(damping * cfg.damping_down, 1e-15);
        accepted = true;
      } else {
        damping *= cfg.damping_up;
        if (damping > 1e32 || step_norm < 1e-300) break;
      }
    }
    if (!accepted) {
      report.termination = "no_descent";
      break;
    }
    if (rel_decrease < cfg.relative_cost_tolerance) {
      report.termination = "relative_cost";
      break;
    }
  }
  report.final_cost = cost;
  result.problem = std::move(state);
  return result;
}

}  // namespace linesfm
