#ifndef DWR_COMMON_HPP
#define DWR_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace dwr {

/// Thrown on invalid user input (config files, domain setup, bad arguments).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a linear or nonlinear solve cannot be completed.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double xx, double yy) : x(xx), y(yy) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Precondition/invariant check that stays active in release builds.
#define DWR_REQUIRE(cond, msg)                                            \
  do {                                                                    \
    if (!(cond)) throw std::logic_error(std::string("requirement failed: ") + (msg)); \
  } while (0)

} // namespace dwr

#endif
