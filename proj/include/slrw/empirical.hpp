#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slrw/linalg.hpp"

namespace slrw {

/// Uniformly weighted point cloud on a rank-i Grassmannian. Wedge
/// coordinates are packed into one matrix so distance queries reduce to a
/// matrix-vector product; at desk scale a linear scan is exact and fast
/// enough.
struct EmpiricalMeasure {
  int rank = 0;
  int ambient = 0;
  std::vector<GrassmannPoint> points;
  Matrix wedges;  // N x C(d, rank), rows are unit wedge vectors

  static EmpiricalMeasure from_points(std::vector<GrassmannPoint> pts) {
    if (pts.empty()) throw std::invalid_argument("EmpiricalMeasure: empty point set");
    EmpiricalMeasure m;
    m.rank = pts[0].rank;
    m.ambient = pts[0].ambient_dim();
    m.wedges.resize(static_cast<long>(pts.size()), pts[0].wedge.size());
    for (size_t j = 0; j < pts.size(); ++j) {
      if (pts[j].rank != m.rank) throw std::invalid_argument("EmpiricalMeasure: mixed ranks");
      m.wedges.row(static_cast<long>(j)) = pts[j].wedge.transpose();
    }
    m.points = std::move(pts);
    return m;
  }

  long size() const { return static_cast<long>(points.size()); }

  /// rho to every point of the cloud, one matrix-vector product.
  Vector distances_to(const Vector& unit_wedge) const {
    Vector c = wedges * unit_wedge;
    return (1.0 - c.array().square()).max(0.0).sqrt().matrix();
  }

  /// Closed-ball mass; boundary ties count in.
  double ball_mass(const GrassmannPoint& center, double r) const {
    Vector dist = distances_to(center.wedge);
    long cnt = (dist.array() <= r).count();
    return static_cast<double>(cnt) / static_cast<double>(size());
  }

  /// Leave-one-out mass of the ball around sample j.
  double ball_mass_loo(long j, double r) const {
    Vector dist = distances_to(points[static_cast<size_t>(j)].wedge);
    long cnt = (dist.array() <= r).count() - 1;  // drop the self atom
    if (cnt < 0) cnt = 0;
    return static_cast<double>(cnt) / static_cast<double>(size() - 1);
  }

  /// k-th nearest distance from an external query point.
  double kth_neighbor_distance(const Vector& unit_wedge, int k) const {
    Vector dist = distances_to(unit_wedge);
    std::vector<double> v(dist.data(), dist.data() + dist.size());
    if (k < 1 || k > static_cast<int>(v.size()))
      throw std::invalid_argument("kth_neighbor_distance: k out of range");
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[static_cast<size_t>(k - 1)];
  }

  /// k-th nearest distance from sample j to the rest of the cloud.
  double kth_neighbor_distance_loo(long j, int k) const {
    Vector dist = distances_to(points[static_cast<size_t>(j)].wedge);
    std::vector<double> v;
    v.reserve(static_cast<size_t>(dist.size()) - 1);
    for (long t = 0; t < dist.size(); ++t)
      if (t != j) v.push_back(dist(t));
    if (k < 1 || k > static_cast<int>(v.size()))
      throw std::invalid_argument("kth_neighbor_distance_loo: k out of range");
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[static_cast<size_t>(k - 1)];
  }

  EmpiricalMeasure mapped_by(const Matrix& g) const {
    std::vector<GrassmannPoint> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.push_back(act_on_grassmann(g, p));
    return from_points(std::move(pts));
  }
};

}  // namespace slrw
