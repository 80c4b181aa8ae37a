#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace citywalk {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

/// WGS-84 style coordinate in degrees. Construction validates ranges, so every
/// GeoPoint in the program is finite and in range.
class GeoPoint {
 public:
  GeoPoint(double longitude, double latitude);

  double longitude() const { return longitude_; }
  double latitude() const { return latitude_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double longitude_;
  double latitude_;
};

/// Great-circle distance in meters on a sphere of radius kEarthRadiusMeters.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Dense symmetric n x n matrix of non-negative distances with zero diagonal.
class DistanceMatrix {
 public:
  /// Validates symmetry, zero diagonal and finiteness; throws
  /// std::invalid_argument on violation.
  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * n_, n_};
  }

  /// Principal submatrix over the given indices, in the given order.
  DistanceMatrix subset(std::span<const std::size_t> indices) const;

 private:
  friend DistanceMatrix build_distance_matrix(std::span<const GeoPoint> points);
  DistanceMatrix(std::size_t n, std::vector<double> entries)
      : n_(n), entries_(std::move(entries)) {}

  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// Pairwise haversine distances. Throws std::invalid_argument("empty point set").
DistanceMatrix build_distance_matrix(std::span<const GeoPoint> points);

/// Planar position in meters, used by the intersection predicates.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Equirectangular projection centered on the mean latitude of `points`.
std::vector<PlanarPoint> project_equirectangular(std::span<const GeoPoint> points);

/// Number of unordered pairs of non-adjacent path segments that touch or
/// cross. Consecutive duplicate points are collapsed first. Collinear overlap
/// and a shared endpoint (a revisit) each count once per pair.
/// Throws std::invalid_argument("degenerate path") for fewer than 2 points.
std::size_t count_self_intersections(std::span<const GeoPoint> path);

/// Sum of consecutive haversine distances along the path.
double path_length(std::span<const GeoPoint> path);

/// Arithmetic mean of coordinates (planar approximation, city scale).
GeoPoint centroid(std::span<const GeoPoint> points);

}  // namespace citywalk
