// Small fixed-size vector/quaternion/matrix math used throughout the core.
#pragma once

#include <array>
#include <cmath>

namespace tmd {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

// Unit quaternion (w, x, y, z); rotates body-frame vectors into the lab frame.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  void normalize() {
    const double n = norm();
    w /= n; x /= n; y /= n; z /= n;
  }
};

inline Quat quat_from_axis_angle(const Vec3& axis, double angle) {
  const double n = norm(axis);
  if (n == 0.0) return {};
  const double s = std::sin(0.5 * angle) / n;
  return {std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s};
}

inline Quat qmul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Body -> lab rotation: v' = v + 2 w (u x v) + 2 u x (u x v), u = (x,y,z).
inline Vec3 rotate(const Quat& q, const Vec3& v) {
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = cross(u, v);
  return v + 2.0 * q.w * t + 2.0 * cross(u, t);
}

// Lab -> body rotation (conjugate quaternion).
inline Vec3 rotate_inv(const Quat& q, const Vec3& v) {
  const Vec3 u{-q.x, -q.y, -q.z};
  const Vec3 t = cross(u, v);
  return v + 2.0 * q.w * t + 2.0 * cross(u, t);
}

struct Mat3 {
  // row-major
  std::array<std::array<double, 3>, 3> a{};

  static Mat3 zero() { return {}; }
  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }
};

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

inline Vec3 mat_tvec(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(1, 0) * v.y + m(2, 0) * v.z,
          m(0, 1) * v.x + m(1, 1) * v.y + m(2, 1) * v.z,
          m(0, 2) * v.x + m(1, 2) * v.y + m(2, 2) * v.z};
}

inline Mat3 quat_to_mat(const Quat& q) {
  Mat3 m;
  const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  m(0, 0) = ww + xx - yy - zz;
  m(0, 1) = 2.0 * (q.x * q.y - q.w * q.z);
  m(0, 2) = 2.0 * (q.x * q.z + q.w * q.y);
  m(1, 0) = 2.0 * (q.x * q.y + q.w * q.z);
  m(1, 1) = ww - xx + yy - zz;
  m(1, 2) = 2.0 * (q.y * q.z - q.w * q.x);
  m(2, 0) = 2.0 * (q.x * q.z - q.w * q.y);
  m(2, 1) = 2.0 * (q.y * q.z + q.w * q.x);
  m(2, 2) = ww - xx - yy + zz;
  return m;
}

// Jacobi eigendecomposition of a symmetric 3x3 matrix.
// Fills eigenvalues (ascending) and the corresponding orthonormal eigenvectors
// as the COLUMNS of `vecs`.
void jacobi_eigen3(const Mat3& m, std::array<double, 3>& vals, Mat3& vecs);

}  // namespace tmd
