// Simplified line-support-region detector: level-line field, greedy region
// growing by orientation, rectangle approximation. No a-contrario validation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "linesfm/detection.hpp"

namespace linesfm {
namespace {

constexpr double kNotDefined = -1024.0;

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> angle;
  std::vector<double> magnitude;
};

// 2x2 gradient; the sample for (x, y) sits at (x + 0.5, y + 0.5).
GradientField ComputeGradient(const GrayImage& img, double threshold) {
  GradientField g;
  g.width = img.width - 1;
  g.height = img.height - 1;
  g.angle.assign(static_cast<std::size_t>(g.width) * g.height, kNotDefined);
  g.magnitude.assign(g.angle.size(), 0.0);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const double a = img.at(x, y);
      const double b = img.at(x + 1, y);
      const double c = img.at(x, y + 1);
      const double d = img.at(x + 1, y + 1);
      const double com1 = d - a;
      const double com2 = b - c;
      const double gx = com1 + com2;
      const double gy = com1 - com2;
      const double norm = std::sqrt((gx * gx + gy * gy) / 4.0);
      const std::size_t idx = static_cast<std::size_t>(y) * g.width + x;
      g.magnitude[idx] = norm;
      if (norm > threshold) g.angle[idx] = std::atan2(gx, -gy);
    }
  }
  return g;
}

double AngleDiff(double a, double b) {
  double d = a - b;
  while (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  return std::abs(d);
}

struct Region {
  std::vector<int> pixels;
  double angle = 0.0;
};

Region GrowRegion(const GradientField& g, int seed, double tolerance, std::vector<std::uint8_t>& used) {
  Region r;
  r.pixels.push_back(seed);
  used[seed] = 1;
  r.angle = g.angle[seed];
  double sum_cos = std::cos(r.angle);
  double sum_sin = std::sin(r.angle);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const int px = r.pixels[i] % g.width;
    const int py = r.pixels[i] / g.width;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = px + dx;
        const int ny = py + dy;
        if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
        const int n = ny * g.width + nx;
        if (used[n] || g.angle[n] == kNotDefined) continue;
        if (AngleDiff(g.angle[n], r.angle) > tolerance) continue;
        used[n] = 1;
        r.pixels.push_back(n);
        sum_cos += std::cos(g.angle[n]);
        sum_sin += std::sin(g.angle[n]);
        r.angle = std::atan2(sum_sin, sum_cos);
      }
    }
  }
  return r;
}

struct Rectangle {
  Vec2 start;
  Vec2 end;
  double length = 0.0;
  double width = 0.0;
};

Rectangle FitRectangle(const GradientField& g, const Region& r) {
  double sum_w = 0.0;
  Vec2 center = Vec2::Zero();
  for (int p : r.pixels) {
    const double w = g.magnitude[p];
    center += w * Vec2(p % g.width + 0.5, p / g.width + 0.5);
    sum_w += w;
  }
  center /= sum_w;

  Eigen::Matrix2d inertia = Eigen::Matrix2d::Zero();
  for (int p : r.pixels) {
    const Vec2 q = Vec2(p % g.width + 0.5, p / g.width + 0.5) - center;
    inertia += g.magnitude[p] * q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(inertia);
  Vec2 dir = es.eigenvectors().col(1);
  // Level-line direction of the region decides the orientation sign.
  const Vec2 level(std::cos(r.angle), std::sin(r.angle));
  if (dir.dot(level) < 0) dir = -dir;
  const Vec2 normal(-dir.y(), dir.x());

  double l_min = 0, l_max = 0, w_min = 0, w_max = 0;
  for (int p : r.pixels) {
    const Vec2 q = Vec2(p % g.width + 0.5, p / g.width + 0.5) - center;
    const double l = q.dot(dir);
    const double w = q.dot(normal);
    l_min = std::min(l_min, l);
    l_max = std::max(l_max, l);
    w_min = std::min(w_min, w);
    w_max = std::max(w_max, w);
  }
  Rectangle rect;
  rect.start = center + l_min * dir;
  rect.end = center + l_max * dir;
  rect.length = l_max - l_min;
  rect.width = w_max - w_min + 1.0;
  return rect;
}

}  // namespace

std::vector<Segment2D> DetectSegments2D(const GrayImage& image, const LsdConfig& cfg) {
  if (image.width < 16 || image.height < 16) {
    Throw(ErrorCode::kImageTooSmall, "line detection needs at least a 16x16 image");
  }
  const double tolerance = cfg.angle_tolerance_deg * std::numbers::pi / 180.0;
  const double threshold = cfg.gradient_quantization / std::sin(tolerance);
  const GradientField g = ComputeGradient(image, threshold);

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(g.angle.size()); ++i) {
    if (g.angle[i] != kNotDefined) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return g.magnitude[a] > g.magnitude[b]; });

  std::vector<std::uint8_t> used(g.angle.size(), 0);
  std::vector<Segment2D> segments;
  for (int seed : order) {
    if (used[seed]) continue;
    Region region = GrowRegion(g, seed, tolerance, used);
    if (static_cast<int>(region.pixels.size()) < cfg.min_region_size) continue;
    Rectangle rect = FitRectangle(g, region);
    if (rect.width > cfg.max_width) {
      // Refinement: regrow from the seed with a tighter tolerance; pixels of
      // the wide region not in the new one become available again.
      for (int p : region.pixels) used[p] = 0;
      region = GrowRegion(g, seed, tolerance / 2.0, used);
      if (static_cast<int>(region.pixels.size()) < cfg.min_region_size) continue;
      rect = FitRectangle(g, region);
      if (rect.width > cfg.max_width) continue;
    }
    if (rect.length < cfg.min_length) continue;
    segments.push_back(Segment2D::Clamped(rect.start, rect.end, image.width, image.height));
  }
  return segments;
}

}  // namespace linesfm
