#include "flowsim/spline.hpp"

#include <algorithm>
#include <stdexcept>

#include "flowsim/errors.hpp"

namespace flowsim {

Spline::Spline(std::vector<Vec2> control_points) : pts_(std::move(control_points)) {
    if (pts_.size() < 2) throw ValidationError("spline needs at least 2 control points");
    cum_.resize(pts_.size());
    cum_[0] = 0.0;
    for (size_t i = 1; i < pts_.size(); ++i) {
        double seg = distance(pts_[i - 1], pts_[i]);
        if (seg <= 0.0) throw ValidationError("spline has coincident consecutive control points");
        cum_[i] = cum_[i - 1] + seg;
    }
}

// Index of the segment containing arc length s (clamped).
static size_t segment_index(const std::vector<double> &cum, double s) {
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    size_t i = static_cast<size_t>(it - cum.begin());
    if (i == 0) return 0;
    if (i >= cum.size()) return cum.size() - 2;
    return i - 1;
}

Vec2 Spline::point_at(double s) const {
    s = std::clamp(s, 0.0, total_length());
    size_t i = segment_index(cum_, s);
    double seg_len = cum_[i + 1] - cum_[i];
    double t = (s - cum_[i]) / seg_len;
    return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
}

Vec2 Spline::tangent_at(double s) const {
    const double tol = 1e-9 * std::max(1.0, total_length());
    if (s < -tol || s > total_length() + tol)
        throw std::out_of_range("spline tangent: arc length out of range");
    s = std::clamp(s, 0.0, total_length());

    // Interior vertex: average the adjacent segment directions.
    for (size_t i = 1; i + 1 < pts_.size(); ++i) {
        if (std::abs(s - cum_[i]) <= tol) {
            Vec2 d0 = normalized(pts_[i] - pts_[i - 1]);
            Vec2 d1 = normalized(pts_[i + 1] - pts_[i]);
            Vec2 mean = (d0 + d1) * 0.5;
            if (norm(mean) == 0.0) return d1;  // 180-degree fold
            return normalized(mean);
        }
    }
    size_t i = segment_index(cum_, s);
    return normalized(pts_[i + 1] - pts_[i]);
}

Spline::Nearest Spline::nearest(const Vec2 &p) const {
    return nearest_in_range(p, 0.0, total_length());
}

Spline::Nearest Spline::nearest_in_range(const Vec2 &p, double s_lo, double s_hi) const {
    s_lo = std::clamp(s_lo, 0.0, total_length());
    s_hi = std::clamp(s_hi, s_lo, total_length());
    Nearest best;
    best.distance = -1.0;
    size_t first = segment_index(cum_, s_lo);
    size_t last = segment_index(cum_, s_hi);
    for (size_t i = first; i <= last; ++i) {
        double t = 0.0;
        Vec2 q = project_on_segment(p, pts_[i], pts_[i + 1], &t);
        double seg_len = cum_[i + 1] - cum_[i];
        double s = cum_[i] + t * seg_len;
        if (s < s_lo) {
            s = s_lo;
            q = point_at(s);
        } else if (s > s_hi) {
            s = s_hi;
            q = point_at(s);
        }
        double d = distance(p, q);
        // Strict comparison keeps the earliest (smallest-s) result on ties.
        if (best.distance < 0.0 || d < best.distance) {
            best.s = s;
            best.point = q;
            best.distance = d;
        }
    }
    return best;
}

Spline concat_splines(const std::vector<Spline> &parts) {
    std::vector<Vec2> pts;
    for (const Spline &part : parts) {
        for (const Vec2 &p : part.points()) {
            if (!pts.empty() && distance(pts.back(), p) < 1e-12) continue;
            pts.push_back(p);
        }
    }
    return Spline(std::move(pts));
}

}  // namespace flowsim
