#pragma once

#include <vector>

#include "flowsim/geometry.hpp"

namespace flowsim {

/// Arc-length parameterized polyline. Control points are the vertices; the
/// parameter s runs from 0 at the first point to total_length() at the last.
class Spline {
  public:
    Spline() = default;
    // Throws ValidationError: fewer than 2 points or coincident consecutive points.
    explicit Spline(std::vector<Vec2> control_points);

    const std::vector<Vec2> &points() const { return pts_; }
    const std::vector<double> &cumulative_length() const { return cum_; }
    double total_length() const { return cum_.empty() ? 0.0 : cum_.back(); }

    // Position at arc length s; s is clamped to [0, total_length()].
    Vec2 point_at(double s) const;

    // Unit tangent at arc length s. At an interior vertex the tangent is the
    // normalized mean of the adjacent segment directions. Throws
    // std::out_of_range when s is outside [0, total_length()].
    Vec2 tangent_at(double s) const;

    struct Nearest {
        double s = 0.0;
        Vec2 point;
        double distance = 0.0;
    };

    // Closest point on the polyline to p. Ties break toward smaller s.
    Nearest nearest(const Vec2 &p) const;

    // Same, restricted to the arc-length window [s_lo, s_hi] (clamped).
    Nearest nearest_in_range(const Vec2 &p, double s_lo, double s_hi) const;

    bool operator==(const Spline &o) const { return pts_ == o.pts_; }

  private:
    std::vector<Vec2> pts_;
    std::vector<double> cum_;  // cum_[0] = 0, strictly increasing
};

// Joins splines end to start into one polyline. Coincident joint points are
// deduplicated; distinct joints get a connecting segment.
Spline concat_splines(const std::vector<Spline> &parts);

}  // namespace flowsim
