#include "citywalk/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace citywalk {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Projected coordinates are snapped to 0.1 mm so the orientation predicate
// can be evaluated exactly in 128-bit integers.
constexpr double kGridPerMeter = 1.0e4;

struct GridPoint {
  std::int64_t x;
  std::int64_t y;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

int orientation(const GridPoint& a, const GridPoint& b, const GridPoint& c) {
  const __int128 abx = static_cast<__int128>(b.x) - a.x;
  const __int128 aby = static_cast<__int128>(b.y) - a.y;
  const __int128 acx = static_cast<__int128>(c.x) - a.x;
  const __int128 acy = static_cast<__int128>(c.y) - a.y;
  const __int128 cross = abx * acy - aby * acx;
  return (cross > 0) - (cross < 0);
}

// c is collinear with a-b; is it inside their bounding box?
bool on_segment(const GridPoint& a, const GridPoint& b, const GridPoint& c) {
  return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

bool segments_touch(const GridPoint& p1, const GridPoint& p2, const GridPoint& q1,
                    const GridPoint& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

GeoPoint::GeoPoint(double longitude, double latitude)
    : longitude_(longitude), latitude_(latitude) {
  if (!std::isfinite(longitude) || longitude < -180.0 || longitude > 180.0) {
    throw std::invalid_argument("longitude out of range: " + std::to_string(longitude));
  }
  if (!std::isfinite(latitude) || latitude < -90.0 || latitude > 90.0) {
    throw std::invalid_argument("latitude out of range: " + std::to_string(latitude));
  }
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.latitude() * kDegToRad;
  const double lat2 = b.latitude() * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude() - a.longitude()) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

DistanceMatrix DistanceMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw std::invalid_argument("distance matrix is not square");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = rows[i][j];
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument("distance matrix entries must be finite and non-negative");
      }
      if (i == j && v != 0.0) throw std::invalid_argument("distance matrix diagonal must be zero");
      if (rows[j].size() == n && rows[j][i] != v) {
        throw std::invalid_argument("distance matrix is not symmetric");
      }
      entries.push_back(v);
    }
  }
  return DistanceMatrix(n, std::move(entries));
}

DistanceMatrix DistanceMatrix::subset(std::span<const std::size_t> indices) const {
  const std::size_t m = indices.size();
  std::vector<double> entries(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      entries[a * m + b] = (*this)(indices[a], indices[b]);
    }
  }
  return DistanceMatrix(m, std::move(entries));
}

DistanceMatrix build_distance_matrix(std::span<const GeoPoint> points) {
  if (points.empty()) throw std::invalid_argument("empty point set");
  const std::size_t n = points.size();
  std::vector<double> entries(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine_distance(points[i], points[j]);
      entries[i * n + j] = d;
      entries[j * n + i] = d;
    }
  }
  return DistanceMatrix(n, std::move(entries));
}

std::vector<PlanarPoint> project_equirectangular(std::span<const GeoPoint> points) {
  std::vector<PlanarPoint> out;
  if (points.empty()) return out;
  double lat_sum = 0.0;
  for (const auto& p : points) lat_sum += p.latitude();
  const double cos_lat0 = std::cos(lat_sum / static_cast<double>(points.size()) * kDegToRad);
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({kEarthRadiusMeters * p.longitude() * kDegToRad * cos_lat0,
                   kEarthRadiusMeters * p.latitude() * kDegToRad});
  }
  return out;
}

std::size_t count_self_intersections(std::span<const GeoPoint> path) {
  if (path.size() < 2) throw std::invalid_argument("degenerate path");

  std::vector<GridPoint> grid;
  grid.reserve(path.size());
  for (const auto& p : project_equirectangular(path)) {
    const GridPoint g{std::llround(p.x * kGridPerMeter), std::llround(p.y * kGridPerMeter)};
    if (grid.empty() || !(grid.back() == g)) grid.push_back(g);
  }
  if (grid.size() < 4) return 0;

  const std::size_t segments = grid.size() - 1;
  std::size_t count = 0;
  for (std::size_t i = 0; i < segments; ++i) {
    for (std::size_t j = i + 2; j < segments; ++j) {
      if (segments_touch(grid[i], grid[i + 1], grid[j], grid[j + 1])) ++count;
    }
  }
  return count;
}

double path_length(std::span<const GeoPoint> path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total += haversine_distance(path[i - 1], path[i]);
  }
  return total;
}

GeoPoint centroid(std::span<const GeoPoint> points) {
  if (points.empty()) throw std::invalid_argument("empty point set");
  double lon = 0.0;
  double lat = 0.0;
  for (const auto& p : points) {
    lon += p.longitude();
    lat += p.latitude();
  }
  const auto n = static_cast<double>(points.size());
  return GeoPoint(lon / n, lat / n);
}

}  // namespace citywalk
