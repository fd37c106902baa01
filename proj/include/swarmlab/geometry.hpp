#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace swarmlab::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    bool operator==(const Vec2&) const = default;

    double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct Circle {
    Vec2 center;
    double radius = 0.0;

    bool contains(Vec2 p, double slack = 0.0) const {
        return distance(center, p) <= radius + slack;
    }
};

// Radial partition of the visibility disk: component 0 is the central disk of
// radius inner_radius, components 1..P-1 are equal angular sectors of the
// annulus (inner_radius, d_lim]. Sector 1 starts at -pi/(P-1) so that sector
// centers lie on the compass angles 2*pi*(p-1)/(P-1).
struct Discretization {
    int P = 9;
    double d_lim = 2.0;
    double inner_radius = 0.4;

    int sectors() const { return P - 1; }
    double sector_width() const { return 2.0 * M_PI / sectors(); }
    double sector_start() const { return -M_PI / sectors(); }
    double offset_radius() const { return 0.5 * (inner_radius + d_lim); }

    bool valid() const {
        return P >= 2 && d_lim > 0.0 && inner_radius > 0.0 && inner_radius < d_lim;
    }
};

// Smallest circle enclosing all points, move-to-front incremental construction
// with a fixed (derandomized) insertion order. Deterministic for a fixed
// input order. Throws EmptyPointSet on empty input.
Circle smallest_enclosing_circle(std::span<const Vec2> points);

// Component index of a relative position: 0 for |rel| <= inner_radius, the
// half-open annulus sector otherwise, nullopt beyond d_lim.
std::optional<int> sector_index(Vec2 rel, const Discretization& disc);

// Center points of the P components: offsets[0] = (0,0), the rest on a ring of
// radius (inner_radius + d_lim)/2 at the sector center angles.
std::vector<Vec2> action_offsets(const Discretization& disc);

}  // namespace swarmlab::geom
