#pragma once

// Forward-mode dual numbers with a runtime partial count bounded by a compile-time
// capacity. Generators evaluate their geometry on these to obtain d(position)/d(parameter)
// together with the mesh.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "procrecon/params.hpp"

namespace procrecon {

class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <std::size_t Capacity>
class BasicDual {
 public:
  static constexpr std::size_t capacity = Capacity;

  BasicDual() = default;
  BasicDual(double value) : value_(value) {}  // NOLINT: constants promote implicitly
  BasicDual(double value, std::size_t n) : value_(value), n_(check_size(n)) {}

  static BasicDual variable(double value, std::size_t n, std::size_t index) {
    BasicDual d(value, n);
    d.d_[index] = 1.0;
    return d;
  }

  double value() const { return value_; }
  std::size_t size() const { return n_; }
  double partial(std::size_t i) const { return i < n_ ? d_[i] : 0.0; }
  std::span<const double> partials() const { return {d_.data(), n_}; }
  void set_partial(std::size_t i, double v) {
    if (i >= n_) n_ = check_size(i + 1);
    d_[i] = v;
  }

  BasicDual operator-() const {
    BasicDual r(-value_, n_);
    for (std::size_t i = 0; i < n_; ++i) r.d_[i] = -d_[i];
    return r;
  }

  BasicDual& operator+=(const BasicDual& o) { return *this = *this + o; }
  BasicDual& operator-=(const BasicDual& o) { return *this = *this - o; }
  BasicDual& operator*=(const BasicDual& o) { return *this = *this * o; }
  BasicDual& operator/=(const BasicDual& o) { return *this = *this / o; }

  // r = a*x + b*y over partials; a constant operand contributes zero partials.
  static BasicDual combine(double value, const BasicDual& x, double a, const BasicDual& y, double b) {
    BasicDual r(value, std::max(x.n_, y.n_));
    for (std::size_t i = 0; i < r.n_; ++i) r.d_[i] = a * x.partial(i) + b * y.partial(i);
    return r;
  }
  static BasicDual scale(double value, const BasicDual& x, double a) {
    BasicDual r(value, x.n_);
    for (std::size_t i = 0; i < x.n_; ++i) r.d_[i] = a * x.d_[i];
    return r;
  }

  friend BasicDual operator+(const BasicDual& x, const BasicDual& y) {
    return combine(x.value_ + y.value_, x, 1.0, y, 1.0);
  }
  friend BasicDual operator-(const BasicDual& x, const BasicDual& y) {
    return combine(x.value_ - y.value_, x, 1.0, y, -1.0);
  }
  friend BasicDual operator*(const BasicDual& x, const BasicDual& y) {
    return combine(x.value_ * y.value_, x, y.value_, y, x.value_);
  }
  friend BasicDual operator/(const BasicDual& x, const BasicDual& y) {
    if (y.value_ == 0.0) throw NumericError("div: division by zero");
    double inv = 1.0 / y.value_;
    double q = x.value_ * inv;
    return combine(q, x, inv, y, -q * inv);
  }
  friend BasicDual operator+(const BasicDual& x, double c) { return scale(x.value_ + c, x, 1.0); }
  friend BasicDual operator+(double c, const BasicDual& x) { return scale(c + x.value_, x, 1.0); }
  friend BasicDual operator-(const BasicDual& x, double c) { return scale(x.value_ - c, x, 1.0); }
  friend BasicDual operator-(double c, const BasicDual& x) { return scale(c - x.value_, x, -1.0); }
  friend BasicDual operator*(const BasicDual& x, double c) { return scale(x.value_ * c, x, c); }
  friend BasicDual operator*(double c, const BasicDual& x) { return scale(c * x.value_, x, c); }
  friend BasicDual operator/(const BasicDual& x, double c) {
    if (c == 0.0) throw NumericError("div: division by zero");
    return scale(x.value_ / c, x, 1.0 / c);
  }
  friend BasicDual operator/(double c, const BasicDual& x) { return BasicDual(c) / x; }

  friend bool operator<(const BasicDual& x, const BasicDual& y) { return x.value_ < y.value_; }
  friend bool operator>(const BasicDual& x, const BasicDual& y) { return x.value_ > y.value_; }

  friend BasicDual sin(const BasicDual& x) { return scale(std::sin(x.value_), x, std::cos(x.value_)); }
  friend BasicDual cos(const BasicDual& x) { return scale(std::cos(x.value_), x, -std::sin(x.value_)); }
  friend BasicDual tan(const BasicDual& x) {
    double t = std::tan(x.value_);
    return scale(t, x, 1.0 + t * t);
  }
  friend BasicDual sqrt(const BasicDual& x) {
    if (x.value_ < 0.0) throw NumericError("sqrt: negative argument " + std::to_string(x.value_));
    double s = std::sqrt(x.value_);
    if (s == 0.0) {
      for (std::size_t i = 0; i < x.n_; ++i)
        if (x.d_[i] != 0.0) throw NumericError("sqrt: derivative undefined at 0");
      return BasicDual(0.0, x.n_);
    }
    return scale(s, x, 0.5 / s);
  }
  friend BasicDual pow(const BasicDual& x, double e) {
    if (x.value_ < 0.0 && e != std::floor(e))
      throw NumericError("pow: negative base with fractional exponent");
    if (x.value_ == 0.0 && e < 1.0) throw NumericError("pow: derivative undefined at 0");
    return scale(std::pow(x.value_, e), x, e * std::pow(x.value_, e - 1.0));
  }
  friend BasicDual abs(const BasicDual& x) { return x.value_ < 0.0 ? -x : x; }
  // Ties select the first argument.
  friend BasicDual min(const BasicDual& x, const BasicDual& y) { return y.value_ < x.value_ ? y : x; }
  friend BasicDual max(const BasicDual& x, const BasicDual& y) { return y.value_ > x.value_ ? y : x; }
  friend BasicDual atan2(const BasicDual& y, const BasicDual& x) {
    double r2 = x.value_ * x.value_ + y.value_ * y.value_;
    if (r2 == 0.0) throw NumericError("atan2: undefined at origin");
    return combine(std::atan2(y.value_, x.value_), y, x.value_ / r2, x, -y.value_ / r2);
  }

 private:
  static std::size_t check_size(std::size_t n) {
    if (n > Capacity)
      throw NumericError("dual: " + std::to_string(n) + " partials exceed capacity " +
                         std::to_string(Capacity));
    return n;
  }

  double value_ = 0.0;
  std::size_t n_ = 0;
  std::array<double, Capacity> d_{};
};

inline constexpr std::size_t kMaxGeneratorParams = 32;
using Dual = BasicDual<kMaxGeneratorParams>;

template <class T>
struct Vec3T {
  T x{}, y{}, z{};

  friend Vec3T operator+(const Vec3T& a, const Vec3T& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3T operator-(const Vec3T& a, const Vec3T& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  template <class S>
  friend Vec3T operator*(const Vec3T& a, const S& s) { return {a.x * s, a.y * s, a.z * s}; }
  template <class S>
  friend Vec3T operator*(const S& s, const Vec3T& a) { return {a.x * s, a.y * s, a.z * s}; }
};

template <class T>
T dot(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <class T>
Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <class T>
Vec3T<T> normalized(const Vec3T<T>& a) {
  using std::sqrt;
  T len = sqrt(dot(a, a));
  return {a.x / len, a.y / len, a.z / len};
}

using Vec3 = Vec3T<double>;
using DVec3 = Vec3T<Dual>;

inline Vec3 value_of(const DVec3& v) { return {v.x.value(), v.y.value(), v.z.value()}; }

/// Dense row-major d(positions)/d(parameters): rows = 3 * vertex count.
struct Jacobian {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;

  double operator()(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return entries[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {entries.data() + r * cols, cols}; }

  /// out[c] += sum_r v[r] * J(r, c)
  void accumulate_transpose_product(std::span<const double> v, std::span<double> out) const;
};

/// Continuous parameter i gets unit partial e_i; discrete slots get all-zero partials.
std::vector<Dual> seed(const ParameterVector& values);

struct AssembledGeometry {
  std::vector<double> positions;
  Jacobian jacobian;
};

/// Flattens dual vertices into positions (x,y,z per vertex) and J[3i+axis][k].
AssembledGeometry assemble_jacobian(std::span<const DVec3> verts, std::size_t param_count);

}  // namespace procrecon
