#pragma once

#include <cmath>

namespace flowsim {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Normalize an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a > kPi)
        a -= 2.0 * kPi;
    else if (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2 &o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2 &o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2 &operator+=(const Vec2 &o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    bool operator==(const Vec2 &o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm_sq(const Vec2 &a) { return dot(a, a); }
inline double norm(const Vec2 &a) { return std::sqrt(norm_sq(a)); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }

inline Vec2 normalized(const Vec2 &a) {
    double n = norm(a);
    if (n == 0.0) return {0.0, 0.0};
    return a / n;
}

inline Vec2 heading_vec(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Signed angle from a to b, in (-pi, pi]. Positive means b is counterclockwise of a.
inline double signed_angle(const Vec2 &a, const Vec2 &b) {
    return wrap_angle(std::atan2(cross(a, b), dot(a, b)));
}

struct Segment {
    Vec2 a;
    Vec2 b;
};

// Closest point on segment [a,b] to p; t is the segment parameter in [0,1].
inline Vec2 project_on_segment(const Vec2 &p, const Vec2 &a, const Vec2 &b, double *t_out = nullptr) {
    Vec2 d = b - a;
    double len2 = norm_sq(d);
    double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
    t = std::fmax(0.0, std::fmin(1.0, t));
    if (t_out) *t_out = t;
    return a + d * t;
}

namespace detail {
inline int orientation(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    double v = cross(b - a, c - a);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}
inline bool on_segment(const Vec2 &a, const Vec2 &b, const Vec2 &p) {
    return std::fmin(a.x, b.x) <= p.x && p.x <= std::fmax(a.x, b.x) &&
           std::fmin(a.y, b.y) <= p.y && p.y <= std::fmax(a.y, b.y);
}
}  // namespace detail

// Exact 2D segment intersection test; touching endpoints count as intersecting.
inline bool segments_intersect(const Segment &s1, const Segment &s2) {
    using detail::on_segment;
    using detail::orientation;
    int o1 = orientation(s1.a, s1.b, s2.a);
    int o2 = orientation(s1.a, s1.b, s2.b);
    int o3 = orientation(s2.a, s2.b, s1.a);
    int o4 = orientation(s2.a, s2.b, s1.b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(s1.a, s1.b, s2.a)) return true;
    if (o2 == 0 && on_segment(s1.a, s1.b, s2.b)) return true;
    if (o3 == 0 && on_segment(s2.a, s2.b, s1.a)) return true;
    if (o4 == 0 && on_segment(s2.a, s2.b, s1.b)) return true;
    return false;
}

}  // namespace flowsim
