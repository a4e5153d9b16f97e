#include "flowsim/svg.hpp"

#include <algorithm>
#include <fstream>

#include "flowsim/errors.hpp"

namespace flowsim {

SvgWriter::SvgWriter(Vec2 min_corner, Vec2 max_corner, int pixel_width)
    : min_(min_corner), max_(max_corner) {
    double wx = std::max(1e-9, max_.x - min_.x);
    double wy = std::max(1e-9, max_.y - min_.y);
    scale_ = (pixel_width - 2.0 * pad_) / wx;
    width_px_ = pixel_width;
    height_px_ = static_cast<int>(wy * scale_ + 2.0 * pad_);
}

void SvgWriter::polyline(std::span<const Vec2> pts, const std::string &stroke, double width_px) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width_px
          << "\" points=\"";
    for (const Vec2 &p : pts) body_ << tx(p.x) << "," << ty(p.y) << " ";
    body_ << "\"/>\n";
}

void SvgWriter::circle(const Vec2 &center, double world_radius, const std::string &fill) {
    body_ << "<circle cx=\"" << tx(center.x) << "\" cy=\"" << ty(center.y) << "\" r=\""
          << world_radius * scale_ << "\" fill=\"" << fill << "\"/>\n";
}

void SvgWriter::rect(const Vec2 &min_corner, const Vec2 &max_corner, const std::string &fill) {
    body_ << "<rect x=\"" << tx(min_corner.x) << "\" y=\"" << ty(max_corner.y) << "\" width=\""
          << (max_corner.x - min_corner.x) * scale_ << "\" height=\""
          << (max_corner.y - min_corner.y) * scale_ << "\" fill=\"" << fill << "\"/>\n";
}

void SvgWriter::text(const Vec2 &at, const std::string &content, int font_px) {
    body_ << "<text x=\"" << tx(at.x) << "\" y=\"" << ty(at.y) << "\" font-size=\"" << font_px
          << "\">" << content << "</text>\n";
}

std::string SvgWriter::str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px_ << "\" height=\""
        << height_px_ << "\">\n"
        << body_.str() << "</svg>\n";
    return out.str();
}

void SvgWriter::save(const std::string &path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write SVG: " + path);
    out << str();
}

}  // namespace flowsim
