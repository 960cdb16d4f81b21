#pragma once

#include <set>
#include <string>
#include <vector>

#include "linesfm/association.hpp"
#include "linesfm/geometry.hpp"

namespace linesfm {

struct PointObservation {
  int view = -1;
  Vec2 pixel = Vec2::Zero();
};

struct PointLandmark {
  Vec3 position = Vec3::Zero();
  std::vector<PointObservation> observations;
};

struct LineObservation {
  int view = -1;
  Segment2D segment;  // detected endpoints in that view
};

struct LineLandmark {
  OrthonormalLine line;
  std::vector<LineObservation> observations;
  int cluster_id = -1;
};

struct BAProblem {
  std::vector<Pose> poses;
  CameraIntrinsics K;
  std::vector<PointLandmark> points;
  std::vector<LineLandmark> lines;
  double lambda_R = 1.0;
  double lambda_L = 1.0;
  std::set<int> gauge{0};

  void Validate() const;
};

enum class LossType { kNone, kHuber };

struct SolverConfig {
  int max_iters = 100;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double gradient_tolerance = 1e-10;
  double relative_cost_tolerance = 1e-9;
  // Costs below this are treated as converged (exact-data problems).
  double absolute_cost_tolerance = 1e-20;
  LossType loss = LossType::kNone;
  double huber_delta = 3.0;  // pixels
  bool use_schur = true;

  void Validate() const;
};

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double damping = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

struct SolverReport {
  std::vector<IterationRecord> iterations;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations_run = 0;
  int dropped_observations = 0;
  std::string termination;

  std::string ToCsv() const;
};

Vec2 PointResidual(const PointLandmark& X, const PointObservation& obs, const CameraIntrinsics& K,
                   const std::vector<Pose>& poses);
// Signed distances of the observed endpoints to the projected line.
Vec2 LineResidual(const LineLandmark& L, const LineObservation& obs, const CameraIntrinsics& K,
                  const std::vector<Pose>& poses);

// Weighted squared-residual objective; with a robust loss each block's
// squared norm s is replaced by rho(s).
double TotalCost(const BAProblem& p, LossType loss = LossType::kNone, double huber_delta = 3.0);

struct ResidualBlock {
  enum class Kind { kPoint, kLine };
  Kind kind = Kind::kPoint;
  int landmark = -1;
  int observation = -1;
  int view = -1;
  Vec2 residual = Vec2::Zero();
  Eigen::Matrix<double, 2, 6> J_pose = Eigen::Matrix<double, 2, 6>::Zero();  // (dt, omega)
  Eigen::Matrix<double, 2, Eigen::Dynamic, 0, 2, 4> J_landmark;              // 2x3 point, 2x4 line
};

enum class Differentiation { kAnalytic, kNumeric };

// One block per valid observation. Gauge poses get zero pose columns.
// Throws on invalid observations (behind camera / degenerate projection).
std::vector<ResidualBlock> Jacobians(const BAProblem& p, Differentiation mode = Differentiation::kAnalytic,
                                     double numeric_step = 1e-6);

struct OptimizeResult {
  BAProblem problem;
  SolverReport report;
};

OptimizeResult Optimize(const BAProblem& p, const SolverConfig& cfg = {});

// Solves one damped normal-equation system both through the landmark Schur
// complement and densely; exposed for verification.
struct LinearSolveCheck {
  Eigen::VectorXd schur;
  Eigen::VectorXd dense;
};
LinearSolveCheck CompareLinearSolves(const BAProblem& p, double damping);

// Line landmarks for clusters with >= 2 observations. Observations use each
// member segment's 2D detection; the initial line comes from the cluster.
void AddLineLandmarks(BAProblem& p, const std::vector<LineCluster>& clusters,
                      const std::vector<std::vector<Segment3D>>& segments);

// Similarity about the center of camera `view`: every other center, point
// and line moves to C + s (X - C), rotations unchanged. Reprojection costs
// are invariant, so this only selects a scale gauge.
void ScaleAboutCamera(BAProblem& p, int view, double s);

Vec3 TriangulatePoint(const std::vector<PointObservation>& observations, const CameraIntrinsics& K,
                      const std::vector<Pose>& poses);

// For every cluster with a line, the extremal orthogonal projections of its
// members' endpoints onto that line.
std::vector<Segment3D> LinesToSegments(const std::vector<PluckerLine>& lines, const std::vector<LineCluster>& clusters,
                                       const std::vector<std::vector<Segment3D>>& segments);

}  // namespace linesfm
