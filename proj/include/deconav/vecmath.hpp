#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace deconav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// In-place normalization to unit Euclidean norm. Throws on (near-)zero input.
inline void normalize(std::vector<double>& a) {
  const double n = norm(a);
  if (n < 1e-12) throw std::domain_error("normalize: zero vector");
  for (double& x : a) x /= n;
}

/// Cosine similarity; robust to non-unit inputs. Throws on zero vectors.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < 1e-12 || nb < 1e-12) throw std::domain_error("cosine: zero vector");
  return dot(a, b) / (na * nb);
}

/// Wraps an angle in degrees to [0, 360).
inline double wrap_degrees(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

/// Signed smallest difference a - b in degrees, in (-180, 180].
inline double signed_angle_delta(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace deconav
