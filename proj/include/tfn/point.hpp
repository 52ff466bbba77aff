#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tfn/error.hpp"

namespace tfn {

inline constexpr int kMaxDimension = 3;

/// A point of the Euclidean workspace, dimension 1 to 3.
///
/// Equality and ordering are exact on the coordinates; duplicate detection
/// in measures relies on this, so generators emit exact grid coordinates.
class Point {
 public:
  Point() = default;

  Point(std::initializer_list<double> coords) : Point(std::span<const double>(coords.begin(), coords.size())) {}

  explicit Point(std::span<const double> coords) : dim_(static_cast<int>(coords.size())) {
    if (dim_ < 1 || dim_ > kMaxDimension)
      throw Error(ErrorKind::InvalidInput, "point dimension must be 1..3, got " + std::to_string(dim_));
    for (int k = 0; k < dim_; ++k) {
      if (!std::isfinite(coords[k])) throw Error(ErrorKind::InvalidInput, "non-finite point coordinate");
      c_[k] = coords[k];
    }
  }

  static Point on_line(double x) { return Point{x}; }

  int dimension() const noexcept { return dim_; }
  double operator[](int k) const noexcept { return c_[k]; }
  std::span<const double> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  friend bool operator==(const Point& a, const Point& b) noexcept {
    return a.dim_ == b.dim_ && a.c_ == b.c_;
  }
  friend std::partial_ordering operator<=>(const Point& a, const Point& b) noexcept {
    if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
    for (int k = 0; k < a.dim_; ++k)
      if (auto c = a.c_[k] <=> b.c_[k]; c != 0) return c;
    return std::partial_ordering::equivalent;
  }

  friend std::ostream& operator<<(std::ostream& os, const Point& p) {
    os << '(';
    for (int k = 0; k < p.dim_; ++k) os << (k ? ", " : "") << p.c_[k];
    return os << ')';
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    os << *this;
    return os.str();
  }

 private:
  std::array<double, kMaxDimension> c_{};
  int dim_ = 0;
};

inline void require_same_dimension(int a, int b, const char* where) {
  if (a != b)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(where) + ": dimension " + std::to_string(a) + " vs " + std::to_string(b));
}

inline double squared_distance(const Point& a, const Point& b) {
  require_same_dimension(a.dimension(), b.dimension(), "distance");
  double s = 0.0;
  for (int k = 0; k < a.dimension(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

/// Axis-aligned workspace box W.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> lower, std::vector<double> upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size() || lo.empty() || lo.size() > static_cast<std::size_t>(kMaxDimension))
      throw Error(ErrorKind::InvalidInput, "box bounds must have equal length 1..3");
    for (std::size_t k = 0; k < lo.size(); ++k) {
      if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]))
        throw Error(ErrorKind::InvalidInput, "box bounds must be finite");
      if (lo[k] > hi[k]) throw Error(ErrorKind::InvalidInput, "box is empty: lo > hi on axis " + std::to_string(k));
    }
  }

  int dimension() const noexcept { return static_cast<int>(lo.size()); }
  double extent(int k) const { return hi[k] - lo[k]; }

  bool contains(const Point& p) const {
    if (p.dimension() != dimension()) return false;
    for (int k = 0; k < dimension(); ++k)
      if (p[k] < lo[k] || p[k] > hi[k]) return false;
    return true;
  }

  double diameter() const {
    double s = 0.0;
    for (int k = 0; k < dimension(); ++k) s += extent(k) * extent(k);
    return std::sqrt(s);
  }
};

}  // namespace tfn
