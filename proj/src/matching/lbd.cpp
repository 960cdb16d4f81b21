// Band descriptor: kLbdBands bands of kLbdBandWidth rows parallel to the
// segment, each summarized by mean/std of the four signed gradient sums
// (+/- along the normal, +/- along the segment) over positions on the line.
// Rows carry a Gaussian weight in their distance to the line.

#include <cmath>

#include "linesfm/matching.hpp"

namespace linesfm {
namespace {

double Bilinear(const std::vector<double>& field, int width, int height, double x, double y) {
  if (x < 0 || y < 0 || x > width - 1 || y > height - 1) return 0.0;
  const int x0 = std::min(static_cast<int>(x), width - 2);
  const int y0 = std::min(static_cast<int>(y), height - 2);
  const double fx = x - x0;
  const double fy = y - y0;
  auto v = [&](int xx, int yy) { return field[static_cast<std::size_t>(yy) * width + xx]; };
  return (1 - fx) * (1 - fy) * v(x0, y0) + fx * (1 - fy) * v(x0 + 1, y0) + (1 - fx) * fy * v(x0, y0 + 1) +
         fx * fy * v(x0 + 1, y0 + 1);
}

}  // namespace

Eigen::VectorXd ComputeLbd(const GrayImage& image, const Segment2D& seg) {
  const double w = image.width;
  const double h = image.height;
  for (const Vec2& p : {seg.start, seg.end}) {
    if (p.x() < 0 || p.y() < 0 || p.x() > w - 1 || p.y() > h - 1) {
      Throw(ErrorCode::kSegmentOutOfImage, "segment endpoint outside the image");
    }
  }
  if (image.width < 3 || image.height < 3) Throw(ErrorCode::kSegmentOutOfImage, "image too small");

  std::vector<double> gx(image.data.size(), 0.0);
  std::vector<double> gy(image.data.size(), 0.0);
  for (int y = 1; y + 1 < image.height; ++y) {
    for (int x = 1; x + 1 < image.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * image.width + x;
      gx[i] = 0.5 * (static_cast<double>(image.at(x + 1, y)) - image.at(x - 1, y));
      gy[i] = 0.5 * (static_cast<double>(image.at(x, y + 1)) - image.at(x, y - 1));
    }
  }

  // Samples stay half a band width away from the endpoints, where the line
  // usually meets other structure.
  const double inset = std::min(0.5 * kLbdBandWidth, 0.25 * seg.Length());
  const double span = seg.Length() - 2.0 * inset;
  const int positions = static_cast<int>(std::floor(span)) + 1;
  auto offset = [&](int k) { return positions > 1 ? inset + span * k / (positions - 1) : inset; };
  // Orient the segment so the gradient on the line points along +normal; this
  // makes the descriptor independent of endpoint order.
  Vec2 origin = seg.start;
  Vec2 along = seg.Direction();
  double flux = 0.0;
  for (int k = 0; k < positions; ++k) {
    const Vec2 p = origin + offset(k) * along;
    flux += Bilinear(gx, image.width, image.height, p.x(), p.y()) * -along.y() +
            Bilinear(gy, image.width, image.height, p.x(), p.y()) * along.x();
  }
  if (flux < 0) {
    origin = seg.end;
    along = -along;
  }
  const Vec2 normal(-along.y(), along.x());
  const int half_rows = kLbdBands * kLbdBandWidth / 2;
  // Global Gaussian row weight: rows far from the line matter less.
  const double sigma_g = 0.5 * (kLbdBands * kLbdBandWidth - 1);

  // sums[band][k][0..3] for each position k.
  std::vector<std::array<double, 4>> sums(static_cast<std::size_t>(kLbdBands) * positions, {0, 0, 0, 0});
  for (int k = 0; k < positions; ++k) {
    const Vec2 base = origin + offset(k) * along;
    for (int r = -half_rows; r <= half_rows; ++r) {
      const int band = (r + half_rows) / kLbdBandWidth;
      const Vec2 p = base + r * normal;
      const double ggx = Bilinear(gx, image.width, image.height, p.x(), p.y());
      const double ggy = Bilinear(gy, image.width, image.height, p.x(), p.y());
      const double wg = std::exp(-0.5 * r * r / (sigma_g * sigma_g));
      const double g_perp = wg * (ggx * normal.x() + ggy * normal.y());
      const double g_along = wg * (ggx * along.x() + ggy * along.y());
      auto& acc = sums[static_cast<std::size_t>(band) * positions + k];
      (g_perp > 0 ? acc[0] : acc[1]) += std::abs(g_perp);
      (g_along > 0 ? acc[2] : acc[3]) += std::abs(g_along);
    }
  }

  Eigen::VectorXd desc(kLbdDims);
  for (int b = 0; b < kLbdBands; ++b) {
    for (int c = 0; c < 4; ++c) {
      double mean = 0.0;
      for (int k = 0; k < positions; ++k) mean += sums[static_cast<std::size_t>(b) * positions + k][c];
      mean /= positions;
      double var = 0.0;
      for (int k = 0; k < positions; ++k) {
        const double dv = sums[static_cast<std::size_t>(b) * positions + k][c] - mean;
        var += dv * dv;
      }
      desc(b * 8 + c) = mean;
      desc(b * 8 + 4 + c) = std::sqrt(var / positions);
    }
  }
  const double n = desc.norm();
  if (n > 0) desc /= n;
  return desc;
}

double DescriptorDistance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) Throw(ErrorCode::kInvalidArgument, "descriptor length mismatch");
  return (a - b).norm();
}

}  // namespace linesfm
