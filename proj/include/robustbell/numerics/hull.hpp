// Copyright 2026 The robustbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "robustbell/errors.hpp"
#include "robustbell/numerics/sobol.hpp"

namespace robustbell {

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

/// Convex polygon with counterclockwise vertices and no collinear vertices.
class Hull2D {
 public:
  explicit Hull2D(std::vector<Point2> points) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) throw ValidationError("convex_hull: need at least 3 distinct points");
    lo_ = hi_ = points.front();
    for (const auto& p : points)
      for (int i = 0; i < 2; ++i) {
        lo_[i] = std::min(lo_[i], p[i]);
        hi_[i] = std::max(hi_[i], p[i]);
      }
    const double scale = std::max(hi_[0] - lo_[0], hi_[1] - lo_[1]);
    eps_ = 1e-12 * scale * scale;

    // Andrew's monotone chain, dropping collinear points.
    std::vector<Point2> h(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= eps_) --k;
      h[k++] = p;
    }
    for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
      const auto& p = points[i];
      while (k >= t && cross(h[k - 2], h[k - 1], p) <= eps_) --k;
      h[k++] = p;
    }
    h.resize(k - 1);
    if (h.size() < 3) throw ValidationError("convex_hull: input points are collinear");
    vertices_ = std::move(h);
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  Point2 lower() const { return lo_; }
  Point2 upper() const { return hi_; }

  bool contains(const Point2& p) const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i)
      if (cross(vertices_[i], vertices_[(i + 1) % n], p) < -eps_) return false;
    return true;
  }

  double area() const {
    double a = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = vertices_[i];
      const auto& q = vertices_[(i + 1) % n];
      a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * a;
  }

 private:
  static double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  }

  std::vector<Point2> vertices_;
  Point2 lo_{}, hi_{};
  double eps_ = 0.0;
};

inline Hull2D convex_hull(const std::vector<Point2>& points) { return Hull2D(points); }
inline bool contains(const Hull2D& h, const Point2& p) { return h.contains(p); }

/// Convex polytope in 3-D, stored as outward facet half-spaces n.x <= c.
/// Built incrementally; inputs are rescaled to the unit cube internally.
class Hull3D {
 public:
  explicit Hull3D(const std::vector<Point3>& input) {
    if (input.size() < 4) throw ValidationError("convex_hull_3d: need at least 4 points");
    lo_ = hi_ = input.front();
    for (const auto& p : input)
      for (int i = 0; i < 3; ++i) {
        lo_[i] = std::min(lo_[i], p[i]);
        hi_[i] = std::max(hi_[i], p[i]);
      }
    for (int i = 0; i < 3; ++i)
      if (!(hi_[i] > lo_[i])) throw ValidationError("convex_hull_3d: input is degenerate (flat along an axis)");
    std::vector<Point3> pts;
    pts.reserve(input.size());
    for (const auto& p : input) pts.push_back(to_unit(p));

    // Initial tetrahedron from extreme points.
    const std::size_t i0 = 0;
    std::size_t i1 = farthest(pts, [&](const Point3& q) { return norm2(sub(q, pts[i0])); });
    const Point3 e01 = sub(pts[i1], pts[i0]);
    std::size_t i2 = farthest(pts, [&](const Point3& q) { return norm2(cross(e01, sub(q, pts[i0]))); });
    const Point3 nrm = cross(e01, sub(pts[i2], pts[i0]));
    std::size_t i3 = farthest(pts, [&](const Point3& q) { return std::abs(dot(nrm, sub(q, pts[i0]))); });
    if (norm2(e01) < 1e-20 || norm2(nrm) < 1e-20 || std::abs(dot(nrm, sub(pts[i3], pts[i0]))) < 1e-12)
      throw ValidationError("convex_hull_3d: input points are coplanar");

    interior_ = {0.0, 0.0, 0.0};
    for (auto i : {i0, i1, i2, i3})
      for (int d = 0; d < 3; ++d) interior_[d] += 0.25 * pts[i][d];
    std::vector<Face> faces;
    add_face(faces, pts, i0, i1, i2);
    add_face(faces, pts, i0, i1, i3);
    add_face(faces, pts, i0, i2, i3);
    add_face(faces, pts, i1, i2, i3);

    for (std::size_t p = 0; p < pts.size(); ++p) {
      std::vector<char> visible(faces.size(), 0);
      bool any = false;
      for (std::size_t f = 0; f < faces.size(); ++f)
        if (dot(faces[f].n, pts[p]) - faces[f].c > eps) visible[f] = any = true;
      if (!any) continue;
      std::map<std::pair<std::size_t, std::size_t>, int> edges;
      for (std::size_t f = 0; f < faces.size(); ++f) {
        if (!visible[f]) continue;
        const auto& v = faces[f].v;
        for (int e = 0; e < 3; ++e) edges[{v[e], v[(e + 1) % 3]}]++;
      }
      std::vector<Face> kept;
      for (std::size_t f = 0; f < faces.size(); ++f)
        if (!visible[f]) kept.push_back(faces[f]);
      for (const auto& [edge, count] : edges)
        if (!edges.count({edge.second, edge.first})) add_face(kept, pts, edge.first, edge.second, p);
      faces = std::move(kept);
    }
    faces_ = std::move(faces);
  }

  bool contains(const Point3& q) const {
    const Point3 u = to_unit(q);
    for (const auto& f : faces_)
      if (dot(f.n, u) - f.c > eps) return false;
    return true;
  }

  std::size_t facet_count() const { return faces_.size(); }
  Point3 lower() const { return lo_; }
  Point3 upper() const { return hi_; }

 private:
  struct Face {
    std::array<std::size_t, 3> v;
    Point3 n;
    double c;
  };
  static constexpr double eps = 1e-10;

  static Point3 sub(const Point3& a, const Point3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
  static double dot(const Point3& a, const Point3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
  static double norm2(const Point3& a) { return dot(a, a); }
  static Point3 cross(const Point3& a, const Point3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  }
  template <class F>
  static std::size_t farthest(const std::vector<Point3>& pts, F&& score) {
    std::size_t best = 0;
    double s = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (double v = score(pts[i]); v > s) {
        s = v;
        best = i;
      }
    return best;
  }

  // Orders (a, b, c) so the normal points away from the interior reference point.
  void add_face(std::vector<Face>& faces, const std::vector<Point3>& pts, std::size_t a, std::size_t b,
                std::size_t c) const {
    Point3 n = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
    const double len = std::sqrt(norm2(n));
    if (len == 0.0) return;
    for (auto& x : n) x /= len;
    double off = dot(n, pts[a]);
    if (dot(n, interior_) > off) {
      for (auto& x : n) x = -x;
      off = -off;
      std::swap(a, b);
    }
    faces.push_back({{a, b, c}, n, off});
  }

  Point3 to_unit(const Point3& p) const {
    return {(p[0] - lo_[0]) / (hi_[0] - lo_[0]), (p[1] - lo_[1]) / (hi_[1] - lo_[1]),
            (p[2] - lo_[2]) / (hi_[2] - lo_[2])};
  }

  std::vector<Face> faces_;
  Point3 lo_{}, hi_{};
  Point3 interior_{};
};

/// Sobol points scaled to the hull's bounding box and kept when inside the hull,
/// until n are accepted. Gives up after 100 n candidates.
inline std::vector<Point2> fill(const Hull2D& h, int n, int skip = 1) {
  detail::require(n >= 0, "fill: n must be >= 0");
  std::vector<Point2> out;
  if (n == 0) return out;
  SobolSequence seq(2);
  seq.skip(static_cast<std::uint64_t>(skip));
  const auto lo = h.lower(), hi = h.upper();
  for (long attempt = 0; attempt < 100L * n && static_cast<int>(out.size()) < n; ++attempt) {
    const auto u = seq.next();
    Point2 p{lo[0] + u[0] * (hi[0] - lo[0]), lo[1] + u[1] * (hi[1] - lo[1])};
    if (h.contains(p)) out.push_back(p);
  }
  if (static_cast<int>(out.size()) < n) throw NumericError("fill: hull too thin, rejection budget exhausted");
  return out;
}

inline std::vector<Point3> fill(const Hull3D& h, int n, int skip = 1) {
  detail::require(n >= 0, "fill: n must be >= 0");
  std::vector<Point3> out;
  if (n == 0) return out;
  SobolSequence seq(3);
  seq.skip(static_cast<std::uint64_t>(skip));
  const auto lo = h.lower(), hi = h.upper();
  for (long attempt = 0; attempt < 100L * n && static_cast<int>(out.size()) < n; ++attempt) {
    const auto u = seq.next();
    Point3 p{lo[0] + u[0] * (hi[0] - lo[0]), lo[1] + u[1] * (hi[1] - lo[1]), lo[2] + u[2] * (hi[2] - lo[2])};
    if (h.contains(p)) out.push_back(p);
  }
  if (static_cast<int>(out.size()) < n) throw NumericError("fill: hull too thin, rejection budget exhausted");
  return out;
}

}  // namespace robustbell
