#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "subgauss/graph.hpp"
#include "subgauss/util.hpp"

namespace subgauss {

struct DoublingReport {
    double D = 1.0;            // measured doubling constant
    double Q_L = 0.0;          // fitted lower volume exponent
    double Q_U = 0.0;          // fitted upper volume exponent
    double lambda_perf = 0.0;  // measured uniform-perfectness constant
    std::vector<double> radii_grid;
    std::string mode;          // exhaustive | sampled
};

struct DoublingOptions {
    std::size_t max_balls = 100000;   // exhaustive cap; geometric sampling beyond
    int per_decade = 16;
    double min_pair_ratio = 4.0;      // R/r floor for exponent slopes
    double trim = 0.10;               // two-sided quantile trim on slopes
    std::size_t diam_exact_cap = 512; // exact ball diameter up to this size
};

/// Exact diameter for small balls, double-sweep lower bound beyond
/// (exact on trees).
inline double ball_diameter(const MetricMeasureGraph& g, const Ball& b,
                            std::size_t exact_cap = 512) {
    if (b.members.size() <= 1) return 0.0;
    if (b.members.size() <= exact_cap) {
        double d = 0.0;
        for (std::size_t i = 0; i < b.members.size(); ++i) {
            const auto& row = g.distance_row(b.members[i]);
            for (std::size_t j = i + 1; j < b.members.size(); ++j)
                d = std::max(d, row[b.members[j]]);
        }
        return d;
    }
    VertexId far = b.members.front();
    {
        const auto& row = g.distance_row(b.center);
        for (VertexId v : b.members)
            if (row[v] > row[far]) far = v;
    }
    double d = 0.0;
    const auto& row = g.distance_row(far);
    for (VertexId v : b.members) d = std::max(d, row[v]);
    return d;
}

/// Volume doubling / uniform perfectness diagnostics over a radius grid.
/// D is the exact max of mu(B(x,2r))/mu(B(x,r)) over the sweep; the volume
/// exponents come from trimmed quantiles of same-center log-log slopes with
/// at least min_pair_ratio radius separation, so granularity spikes at the
/// lattice scale do not contaminate them.
inline DoublingReport doubling_report(const MetricMeasureGraph& g,
                                      std::vector<double> radii,
                                      const DoublingOptions& opt = {}) {
    if (radii.empty()) throw std::invalid_argument("doubling_report: empty radius grid");
    double diam = g.diameter();
    std::sort(radii.begin(), radii.end());
    radii.erase(std::remove_if(radii.begin(), radii.end(),
                               [&](double r) { return !(r > 0.0) || r > diam; }),
                radii.end());
    if (radii.empty()) throw std::invalid_argument("doubling_report: no radii in (0, diam]");

    int n = g.vertex_count();
    DoublingReport rep;
    rep.mode = "exhaustive";
    if (static_cast<std::size_t>(n) * radii.size() > opt.max_balls) {
        rep.mode = "sampled";
        double lo = std::max(radii.front(), 0.5 * g.min_edge_length());
        radii = geometric_radii(lo, diam, opt.per_decade);
    }
    rep.radii_grid = radii;

    rep.D = 1.0;
    rep.lambda_perf = 2.0;
    double ell = g.min_edge_length();
    for (VertexId x = 0; x < n; ++x) {
        for (double r : radii) {
            double vr = g.ball_mass(x, r);
            double v2r = g.ball_mass(x, 2.0 * r);
            rep.D = std::max(rep.D, v2r / vr);
            if (r >= 2.0 * ell && r < diam) {
                Ball b = ball(g, x, r);
                double bd = ball_diameter(g, b, opt.diam_exact_cap);
                rep.lambda_perf = std::min(rep.lambda_perf, bd / r);
            }
        }
    }

    // Volume exponents.
    std::vector<double> slopes;
    for (VertexId x = 0; x < n; ++x) {
        for (std::size_t i = 0; i < radii.size(); ++i) {
            double r = radii[i];
            if (r < 2.0 * ell) continue;
            for (std::size_t j = i + 1; j < radii.size(); ++j) {
                double R = radii[j];
                if (R > 0.5 * diam) break;
                if (R / r < opt.min_pair_ratio) continue;
                double vr = g.ball_mass(x, r);
                double vR = g.ball_mass(x, R);
                slopes.push_back(std::log(vR / vr) / std::log(R / r));
            }
        }
    }
    if (slopes.empty()) {
        // Tiny graph: fall back to the widest same-center pair available.
        for (VertexId x = 0; x < n; ++x) {
            double r = radii.front(), R = radii.back();
            if (R > r)
                slopes.push_back(std::log(g.ball_mass(x, R) / g.ball_mass(x, r)) /
                                 std::log(R / r));
        }
    }
    if (slopes.empty()) slopes.push_back(1.0);
    std::sort(slopes.begin(), slopes.end());
    auto quantile = [&](double q) {
        double pos = q * (slopes.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        std::size_t hi = std::min(lo + 1, slopes.size() - 1);
        double w = pos - lo;
        return (1.0 - w) * slopes[lo] + w * slopes[hi];
    };
    rep.Q_L = std::max(1e-9, quantile(opt.trim));
    rep.Q_U = std::max(rep.Q_L, quantile(1.0 - opt.trim));
    return rep;
}

}  // namespace subgauss
