#pragma once

// Independent brute-force references used by the unit and acceptance suites.
// These must stay free of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "swarmlab/geometry.hpp"
#include "swarmlab/nn.hpp"

namespace test_support {

using swarmlab::geom::Circle;
using swarmlab::geom::Vec2;

// Smallest enclosing circle by candidate enumeration: every pair defines a
// diameter circle, every triple a circumcircle; the answer is the smallest
// candidate covering all points.
inline Circle brute_force_sec(const std::vector<Vec2>& pts) {
    const double cover_eps = 1e-10;
    auto covers_all = [&](const Circle& c) {
        for (const auto& p : pts)
            if (swarmlab::geom::distance(c.center, p) > c.radius + cover_eps) return false;
        return true;
    };
    Circle best{{0, 0}, -1.0};
    auto consider = [&](const Circle& c) {
        if (c.radius < 0.0 || !covers_all(c)) return;
        if (best.radius < 0.0 || c.radius < best.radius) best = c;
    };
    if (pts.size() == 1) return {pts[0], 0.0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            Vec2 mid = {0.5 * (pts[i].x + pts[j].x), 0.5 * (pts[i].y + pts[j].y)};
            consider({mid, std::max(distance(mid, pts[i]), distance(mid, pts[j]))});
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                Vec2 u = pts[j] - pts[i];
                Vec2 v = pts[k] - pts[i];
                double d = 2.0 * cross(u, v);
                if (d == 0.0) continue;
                double uu = u.norm_sq(), vv = v.norm_sq();
                Vec2 center = pts[i] + Vec2{(v.y * uu - u.y * vv) / d, (u.x * vv - v.x * uu) / d};
                double r = std::max({distance(center, pts[i]), distance(center, pts[j]),
                                     distance(center, pts[k])});
                consider({center, r});
            }
        }
    }
    return best;
}

// Exhaustive K!-permutation minimization of the assignment bottleneck.
inline double brute_force_bottleneck(const std::vector<Vec2>& agents,
                                     const std::vector<Vec2>& targets) {
    std::vector<int> perm(agents.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < agents.size(); ++i)
            worst = std::max(worst, distance(agents[i], targets[perm[i]]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline bool bfs_connected(const std::vector<Vec2>& pts, double d_lim) {
    if (pts.size() <= 1) return true;
    std::vector<char> seen(pts.size(), 0);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
        auto i = q.front();
        q.pop();
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (!seen[j] && distance(pts[i], pts[j]) <= d_lim) {
                seen[j] = 1;
                ++count;
                q.push(j);
            }
        }
    }
    return count == pts.size();
}

// Central finite differences of a scalar function over every parameter of a
// policy network.
template <typename Loss>
swarmlab::nn::Gradients finite_difference(swarmlab::nn::PolicyParams& params, Loss loss,
                                          double h = 1e-5) {
    swarmlab::nn::Gradients fd;
    fd.init_like(params);
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        for (std::size_t i = 0; i < params.W[l].a.size(); ++i) {
            double saved = params.W[l].a[i];
            params.W[l].a[i] = saved + h;
            double up = loss(params);
            params.W[l].a[i] = saved - h;
            double down = loss(params);
            params.W[l].a[i] = saved;
            fd.W[l].a[i] = (up - down) / (2.0 * h);
        }
        for (std::size_t i = 0; i < params.b[l].size(); ++i) {
            double saved = params.b[l][i];
            params.b[l][i] = saved + h;
            double up = loss(params);
            params.b[l][i] = saved - h;
            double down = loss(params);
            params.b[l][i] = saved;
            fd.b[l][i] = (up - down) / (2.0 * h);
        }
    }
    return fd;
}

inline double grad_relative_error(const swarmlab::nn::Gradients& a,
                                  const swarmlab::nn::Gradients& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t l = 0; l < a.W.size(); ++l) {
        for (std::size_t i = 0; i < a.W[l].a.size(); ++i) {
            double d = a.W[l].a[i] - b.W[l].a[i];
            diff += d * d;
            na += a.W[l].a[i] * a.W[l].a[i];
            nb += b.W[l].a[i] * b.W[l].a[i];
        }
        for (std::size_t i = 0; i < a.b[l].size(); ++i) {
            double d = a.b[l][i] - b.b[l][i];
            diff += d * d;
            na += a.b[l][i] * a.b[l][i];
            nb += b.b[l][i] * b.b[l][i];
        }
    }
    double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(diff) / denom;
}

}  // namespace test_support
