#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "subgauss/energy.hpp"
#include "subgauss/graph.hpp"
#include "subgauss/scale.hpp"
#include "subgauss/spectral.hpp"
#include "subgauss/util.hpp"

namespace subgauss {

struct CutoffFunction {
    VertexFunction values;  // in [0,1]; 1 on inner, 0 outside outer
    Ball inner;
    Ball outer;
    std::string construction_tag;  // harmonic | resolvent
    // Resolvent-route parameters.
    double lambda = 0.0;
    double K = 0.0;
    double sigma = 0.0;
    double kappa = 0.0;
    double energy = 0.0;  // E(xi, xi); equals the capacity for the harmonic route
    bool failed_localization = false;

    bool valid(const MetricMeasureGraph& g) const {
        for (VertexId v : inner.members)
            if (values[v] != 1.0) return false;
        std::vector<char> in_outer(g.vertex_count(), 0);
        for (VertexId v : outer.members) in_outer[v] = 1;
        for (VertexId v = 0; v < g.vertex_count(); ++v) {
            if (values[v] < 0.0 || values[v] > 1.0) return false;
            if (!in_outer[v] && values[v] != 0.0) return false;
        }
        return true;
    }
};

/// Equilibrium potential between nested balls: 1 on inner, 0 off outer,
/// harmonic in between. Its energy is the capacity of the pair.
inline CutoffFunction harmonic_cutoff(const Generator& gen, const Ball& inner,
                                      const Ball& outer) {
    const MetricMeasureGraph& g = *gen.graph;
    int n = g.vertex_count();
    if (inner.members.empty()) throw std::invalid_argument("harmonic_cutoff: empty inner ball");
    if (static_cast<int>(outer.members.size()) >= n)
        throw std::invalid_argument("harmonic_cutoff: outer ball covers X, no Dirichlet boundary");
    if (!std::includes(outer.members.begin(), outer.members.end(),
                       inner.members.begin(), inner.members.end()))
        throw std::invalid_argument("harmonic_cutoff: inner ball not contained in outer ball");
    if (inner.members.size() == outer.members.size())
        throw std::invalid_argument("harmonic_cutoff: inner equals outer (degenerate annulus)");

    std::map<VertexId, double> boundary;
    std::vector<char> in_outer(n, 0);
    for (VertexId v : outer.members) in_outer[v] = 1;
    for (VertexId v = 0; v < n; ++v)
        if (!in_outer[v]) boundary[v] = 0.0;
    for (VertexId v : inner.members) boundary[v] = 1.0;

    CutoffFunction c;
    c.values = harmonic_extension(gen, boundary);
    // Direct solves can leave O(eps) excursions outside [0,1]; clamp to honor
    // the cutoff contract.
    for (int v = 0; v < n; ++v) c.values[v] = std::clamp(c.values[v], 0.0, 1.0);
    c.inner = inner;
    c.outer = outer;
    c.construction_tag = "harmonic";
    EnergyForm form(g, 2.0);
    c.energy = energy(form, c.values, c.values);
    return c;
}

/// Indicator of the inner ball; the fallback cutoff when the annulus between
/// the balls is empty.
inline CutoffFunction indicator_cutoff(const MetricMeasureGraph& g, const Ball& inner,
                                       const Ball& outer) {
    CutoffFunction c;
    c.values = VertexFunction::Zero(g.vertex_count());
    for (VertexId v : inner.members) c.values[v] = 1.0;
    c.inner = inner;
    c.outer = outer;
    c.construction_tag = "harmonic";
    EnergyForm form(g, 2.0);
    c.energy = energy(form, c.values, c.values);
    return c;
}

/// Resolvent cutoff construction: phi is a cutoff for
/// B(x0, kappa R0/16) in B(x0, kappa R0/8), h = (L + 1/Psi(R0))^(-1) phi,
/// K is the largest constant with xi := (h/(K Psi(R0)) - 1)^+ ^ 1 equal to 1 on
/// B(x0, kappa R0), and sigma is the measured localization scale:
/// h <= K Psi(R0) whenever d(x0, x) > sigma R0, exactly.
inline CutoffFunction resolvent_cutoff_from_phi(const Generator& gen, VertexId x0,
                                                double R0, const ScaleFunction& psi,
                                                double kappa,
                                                const VertexFunction& phi) {
    const MetricMeasureGraph& g = *gen.graph;
    int n = g.vertex_count();
    double psi_R0 = psi(R0);
    double lambda = 1.0 / psi_R0;
    VertexFunction h = resolvent_solve(gen, lambda, phi);

    Ball inner = ball(g, x0, kappa * R0);
    double h_min = std::numeric_limits<double>::infinity();
    for (VertexId v : inner.members) h_min = std::min(h_min, h[v]);
    double K = h_min / (2.0 * psi_R0);
    if (!(K > 0.0))
        throw std::logic_error("resolvent_cutoff: nonpositive K; resolvent lost positivity");

    double threshold = K * psi_R0;
    CutoffFunction c;
    c.values = VertexFunction::Zero(n);
    double d_star = 0.0;
    bool any_zero = false;
    const auto& dist = g.distance_row(x0);
    for (VertexId v = 0; v < n; ++v) {
        if (h[v] > threshold) {
            c.values[v] = std::clamp(h[v] / threshold - 1.0, 0.0, 1.0);
            d_star = std::max(d_star, dist[v]);
        } else {
            any_zero = true;
        }
    }
    for (VertexId v : inner.members) c.values[v] = 1.0;  // h >= 2 K Psi(R0) there
    c.inner = inner;
    c.outer = enclosing_ball(g, x0, d_star);
    c.construction_tag = "resolvent";
    c.lambda = lambda;
    c.K = K;
    c.kappa = kappa;
    c.sigma = d_star / R0;
    c.failed_localization = !any_zero;
    EnergyForm form(g, 2.0);
    c.energy = energy(form, c.values, c.values);
    return c;
}

inline CutoffFunction resolvent_cutoff(const Generator& gen, VertexId x0, double R0,
                                       const ScaleFunction& psi, double kappa = 0.5) {
    const MetricMeasureGraph& g = *gen.graph;
    if (!(R0 > 0.0) || R0 >= g.diameter())
        throw std::invalid_argument("resolvent_cutoff: R0 must lie in (0, diam)");
    if (!(kappa > 0.0) || kappa > 1.0)
        throw std::invalid_argument("resolvent_cutoff: kappa must lie in (0, 1]");
    Ball phi_inner = ball(g, x0, kappa * R0 / 16.0);
    Ball phi_outer = ball(g, x0, kappa * R0 / 8.0);
    VertexFunction phi;
    if (static_cast<int>(phi_outer.members.size()) >= g.vertex_count() ||
        phi_inner.members.size() == phi_outer.members.size()) {
        phi = indicator_cutoff(g, phi_inner, phi_outer).values;
    } else {
        phi = harmonic_cutoff(gen, phi_inner, phi_outer).values;
    }
    return resolvent_cutoff_from_phi(gen, x0, R0, psi, kappa, phi);
}

// ---------------------------------------------------------------------------
// Regularity measurements
// ---------------------------------------------------------------------------

struct HolderReport {
    double alpha = 0.0;      // fitted exponent; +inf flag for constant f
    double C = 0.0;          // envelope constant: |f(y)-f(z)| <= C (d/R)^alpha holds
    double R = 0.0;
    double fit_r2 = 0.0;
    bool constant_flag = false;
    bool jump_flag = false;  // exponent indistinguishable from 0
};

/// Fits |f(y) - f(z)| <= C (d(y,z)/R)^alpha over the envelope
/// s -> sup_{d(y,z)=s} |f(y) - f(z)| restricted to s <= R. The exponent is a
/// descriptive least-squares fit; the constant is a valid envelope bound.
inline HolderReport holder_report(const MetricMeasureGraph& g, const VertexFunction& f,
                                  double R) {
    if (!(R > 0.0)) throw std::invalid_argument("holder_report: R must be positive");
    HolderReport rep;
    rep.R = R;
    int n = g.vertex_count();
    std::map<double, double> envelope;  // distance -> max |df|
    for (VertexId u = 0; u < n; ++u) {
        const auto& row = g.distance_row(u);
        for (VertexId v = u + 1; v < n; ++v) {
            if (row[v] > R) continue;
            double d = std::abs(f[u] - f[v]);
            auto [it, fresh] = envelope.emplace(row[v], d);
            if (!fresh) it->second = std::max(it->second, d);
        }
    }
    std::vector<double> lx, ly;
    for (const auto& [s, e] : envelope)
        if (e > 0.0 && s > 0.0) {
            lx.push_back(std::log(s / R));
            ly.push_back(std::log(e));
        }
    if (lx.size() < 2) {
        rep.constant_flag = true;
        rep.alpha = std::numeric_limits<double>::infinity();
        rep.C = 0.0;
        return rep;
    }
    LineFit fit = least_squares(lx, ly);
    rep.alpha = std::max(fit.slope, 0.0);
    rep.jump_flag = fit.slope < 0.05;
    rep.fit_r2 = fit.r2;
    double c = 0.0;
    for (const auto& [s, e] : envelope)
        if (s > 0.0) c = std::max(c, e / std::pow(s / R, rep.alpha));
    rep.C = c;
    return rep;
}

struct MaximalFunction {
    std::vector<double> values;
    double p = 2.0;
    double delta = 0.0;
    double R = 0.0;
};

/// Sharp maximal type function M(x) = sup r^-delta avg_B |f - f_B|^p dmu over
/// the combinatorially distinct balls B containing x with radius <= R. Each
/// distinct ball is evaluated at its supremum radius (the largest member
/// distance), which realizes the sup of r^-delta over the radii producing it.
inline MaximalFunction sharp_maximal(const MetricMeasureGraph& g, const VertexFunction& f,
                                     double p, double delta, double R) {
    if (!(p >= 1.0) || !(delta > 0.0) || !(R > 0.0))
        throw std::invalid_argument("sharp_maximal: need p >= 1, delta > 0, R > 0");
    int n = g.vertex_count();
    MaximalFunction m;
    m.values.assign(n, 0.0);
    m.p = p;
    m.delta = delta;
    m.R = R;
    for (VertexId y = 0; y < n; ++y) {
        const CenterIndex& ci = g.center_index(y);
        const std::vector<double>& mu_pre = g.mu_prefix(y);
        std::size_t j = 0;
        double fsum = 0.0;
        while (j < ci.dist.size()) {
            std::size_t k = j;
            double r = ci.dist[j];
            while (k < ci.dist.size() && ci.dist[k] == r) {
                fsum += f[ci.order[k]] * g.mu(ci.order[k]);
                ++k;
            }
            j = k;
            if (r <= 0.0) continue;  // singleton ball: zero deviation
            if (r > R) break;
            double mass = mu_pre[k];
            double mean = fsum / mass;
            double dev = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                VertexId v = ci.order[i];
                dev += std::pow(std::abs(f[v] - mean), p) * g.mu(v);
            }
            double value = std::pow(r, -delta) * dev / mass;
            for (std::size_t i = 0; i < k; ++i) {
                VertexId v = ci.order[i];
                m.values[v] = std::max(m.values[v], value);
            }
        }
    }
    return m;
}

/// Energy maximal function M_E(x) = sup (Theta^p mu(B)/Psi)^-1 Gamma_p<f>(B)
/// over balls containing x with radius <= R.
inline MaximalFunction energy_maximal(const MetricMeasureGraph& g,
                                      const EnergyMeasure& gamma_f,
                                      const SpatialScale& theta,
                                      const ScaleFunction& psi, double p, double R) {
    if (!(p >= 1.0) || !(R > 0.0))
        throw std::invalid_argument("energy_maximal: need p >= 1, R > 0");
    int n = g.vertex_count();
    MaximalFunction m;
    m.values.assign(n, 0.0);
    m.p = p;
    m.R = R;
    for (VertexId y = 0; y < n; ++y) {
        const CenterIndex& ci = g.center_index(y);
        const std::vector<double>& mu_pre = g.mu_prefix(y);
        std::size_t j = 0;
        double gsum = 0.0;
        while (j < ci.dist.size()) {
            std::size_t k = j;
            double r = ci.dist[j];
            while (k < ci.dist.size() && ci.dist[k] == r) {
                gsum += gamma_f.weights[ci.order[k]];
                ++k;
            }
            j = k;
            if (r <= 0.0) continue;
            if (r > R) break;
            double th = theta(y, r);
            double weight = std::pow(th, p) * mu_pre[k] / psi(r);
            if (weight <= 0.0) continue;
            double value = gsum / weight;
            for (std::size_t i = 0; i < k; ++i)
                m.values[ci.order[i]] = std::max(m.values[ci.order[i]], value);
        }
    }
    return m;
}

}  // namespace subgauss
