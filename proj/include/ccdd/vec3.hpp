#pragma once

#include <cmath>

namespace ccdd {

struct vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr vec3& operator+=(const vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr vec3& operator-=(const vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
};

constexpr vec3 operator+(vec3 a, const vec3& b) { return a += b; }
constexpr vec3 operator-(vec3 a, const vec3& b) { return a -= b; }
constexpr vec3 operator*(vec3 a, double s) { return a *= s; }
constexpr vec3 operator*(double s, vec3 a) { return a *= s; }
constexpr vec3 operator-(const vec3& a) { return {-a.x, -a.y, -a.z}; }

constexpr double dot(const vec3& a, const vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr vec3 cross(const vec3& a, const vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const vec3& a) { return std::sqrt(dot(a, a)); }

/**
 * Rotate v by `angle` radians about the unit vector `axis` (right-handed).
 * Rodrigues form: v cos a + (k x v) sin a + k (k.v)(1 - cos a).
 */
inline vec3 rotate(const vec3& v, const vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

/** Rotation about +z by `angle`. */
inline vec3 rotate_z(const vec3& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/** Rotation about +x by `angle`. */
inline vec3 rotate_x(const vec3& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
}

}  // namespace ccdd
