#include "swarmlab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "swarmlab/errors.hpp"

namespace swarmlab::geom {

namespace {

// Coverage slack for the incremental predicates. Well below the 1e-9
// equivalence tolerance the construction is checked against.
constexpr double kEps = 1e-12;

bool covers(const Circle& c, Vec2 p) { return c.contains(p, kEps * (1.0 + c.radius)); }

Circle circle_from_diameter(Vec2 a, Vec2 b) {
    Vec2 center = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    double r = std::max(distance(center, a), distance(center, b));
    return {center, r};
}

// Circumcircle of three points; radius < 0 marks a degenerate (collinear) triple.
Circle circumcircle(Vec2 a, Vec2 b, Vec2 c) {
    // Work relative to a for conditioning.
    Vec2 u = b - a;
    Vec2 v = c - a;
    double d = 2.0 * cross(u, v);
    if (d == 0.0) return {{0.0, 0.0}, -1.0};
    double uu = u.norm_sq();
    double vv = v.norm_sq();
    Vec2 rel = {(v.y * uu - u.y * vv) / d, (u.x * vv - v.x * uu) / d};
    Vec2 center = a + rel;
    double r = std::max({distance(center, a), distance(center, b), distance(center, c)});
    return {center, r};
}

// Smallest circle with p and q on the boundary enclosing points[0..n).
Circle circle_two_boundary(std::span<const Vec2> points, Vec2 p, Vec2 q) {
    Circle circ = circle_from_diameter(p, q);
    Circle left = {{0, 0}, -1.0};
    Circle right = {{0, 0}, -1.0};
    Vec2 pq = q - p;
    for (const Vec2& r : points) {
        if (covers(circ, r)) continue;
        double side = cross(pq, r - p);
        Circle c = circumcircle(p, q, r);
        if (c.radius < 0.0) continue;
        double cside = cross(pq, c.center - p);
        if (side > 0.0) {
            if (left.radius < 0.0 || cside > cross(pq, left.center - p)) left = c;
        } else if (side < 0.0) {
            if (right.radius < 0.0 || cside < cross(pq, right.center - p)) right = c;
        }
    }
    if (left.radius < 0.0 && right.radius < 0.0) return circ;
    if (left.radius < 0.0) return right;
    if (right.radius < 0.0) return left;
    return left.radius <= right.radius ? left : right;
}

// Smallest circle with p on the boundary enclosing points[0..n).
Circle circle_one_boundary(std::span<const Vec2> points, Vec2 p) {
    Circle c = {p, 0.0};
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec2 q = points[i];
        if (covers(c, q)) continue;
        if (c.radius == 0.0) {
            c = circle_from_diameter(p, q);
        } else {
            c = circle_two_boundary(points.subspan(0, i + 1), p, q);
        }
    }
    return c;
}

}  // namespace

Circle smallest_enclosing_circle(std::span<const Vec2> points) {
    if (points.empty()) throw EmptyPointSet();
    Circle c = {points[0], 0.0};
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!covers(c, points[i])) {
            c = circle_one_boundary(points.subspan(0, i), points[i]);
        }
    }
    return c;
}

std::optional<int> sector_index(Vec2 rel, const Discretization& disc) {
    double r = rel.norm();
    if (r <= disc.inner_radius) return 0;
    if (r > disc.d_lim) return std::nullopt;
    double a = std::fmod(std::atan2(rel.y, rel.x) - disc.sector_start(), 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    int idx = static_cast<int>(std::floor(a / disc.sector_width()));
    idx = std::min(idx, disc.sectors() - 1);  // fp guard at the 2*pi wrap
    return idx + 1;
}

std::vector<Vec2> action_offsets(const Discretization& disc) {
    std::vector<Vec2> offsets(disc.P);
    double r = disc.offset_radius();
    for (int p = 1; p < disc.P; ++p) {
        double angle = 2.0 * M_PI * (p - 1) / disc.sectors();
        offsets[p] = {r * std::cos(angle), r * std::sin(angle)};
    }
    return offsets;
}

}  // namespace swarmlab::geom
