#pragma once

#include <span>
#include <sstream>
#include <string>

#include "flowsim/geometry.hpp"

namespace flowsim {

/// Minimal SVG document builder. World coordinates; y grows upward and is
/// flipped into screen space.
class SvgWriter {
  public:
    SvgWriter(Vec2 min_corner, Vec2 max_corner, int pixel_width = 800);

    void polyline(std::span<const Vec2> pts, const std::string &stroke, double width_px = 1.5);
    void circle(const Vec2 &center, double world_radius, const std::string &fill);
    void rect(const Vec2 &min_corner, const Vec2 &max_corner, const std::string &fill);
    void text(const Vec2 &at, const std::string &content, int font_px = 12);

    std::string str() const;
    void save(const std::string &path) const;

  private:
    double tx(double x) const { return (x - min_.x) * scale_ + pad_; }
    double ty(double y) const { return (max_.y - y) * scale_ + pad_; }

    Vec2 min_, max_;
    double scale_ = 1.0;
    double pad_ = 10.0;
    int width_px_ = 0, height_px_ = 0;
    std::ostringstream body_;
};

}  // namespace flowsim
