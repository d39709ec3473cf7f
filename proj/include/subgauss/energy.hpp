#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "subgauss/graph.hpp"

namespace subgauss {

using VertexFunction = Eigen::VectorXd;

/// Energy form over a graph: the Dirichlet form for p = 2 and the abstract
/// p-energy otherwise. The function space is every vertex function.
struct EnergyForm {
    const MetricMeasureGraph* graph = nullptr;
    double p = 2.0;

    EnergyForm(const MetricMeasureGraph& g, double p_ = 2.0) : graph(&g), p(p_) {
        if (!(p >= 1.0)) throw std::invalid_argument("p-energy needs p >= 1");
    }
};

/// Bilinear energy E(f,g) = sum_edges c_uv (f(u)-f(v)) (g(u)-g(v)).
inline double energy(const EnergyForm& form, const VertexFunction& f,
                     const VertexFunction& g) {
    if (form.p != 2.0 && &f != &g)
        throw std::invalid_argument("bilinear energy is defined for p = 2 only");
    double total = 0.0;
    for (const Edge& e : form.graph->edges())
        total += e.conductance * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
    return total;
}

inline double energy(const EnergyForm& form, const VertexFunction& f) {
    if (form.p == 2.0) return energy(form, f, f);
    double total = 0.0;
    for (const Edge& e : form.graph->edges())
        total += e.conductance * std::pow(std::abs(f[e.u] - f[e.v]), form.p);
    return total;
}

/// Energy measure Gamma_p<f> as per-vertex weights: half of each edge's
/// p-energy to each endpoint. The half-edge split makes the Dirichlet-form
/// energy-measure identity exact on graphs and Gamma additive over vertex
/// partitions.
struct EnergyMeasure {
    std::vector<double> weights;
    double total = 0.0;
};

inline EnergyMeasure p_energy_measure(const EnergyForm& form, const VertexFunction& f) {
    EnergyMeasure m;
    m.weights.assign(form.graph->vertex_count(), 0.0);
    for (const Edge& e : form.graph->edges()) {
        double d = std::abs(f[e.u] - f[e.v]);
        double w = form.p == 2.0 ? e.conductance * d * d
                                 : e.conductance * std::pow(d, form.p);
        m.weights[e.u] += 0.5 * w;
        m.weights[e.v] += 0.5 * w;
    }
    for (double w : m.weights) m.total += w;
    return m;
}

inline double measure_on(const EnergyMeasure& m, const std::vector<VertexId>& members) {
    double t = 0.0;
    for (VertexId v : members) t += m.weights[v];
    return t;
}

struct MarkovCheck {
    double energy_before = 0.0;
    double energy_after = 0.0;
    bool holds = false;
};

/// Markov property: the unit contraction f -> (f v 0) ^ 1 never increases energy.
inline MarkovCheck check_markov(const EnergyForm& form, const VertexFunction& f) {
    if (form.p != 2.0) throw std::invalid_argument("check_markov is the p = 2 property");
    VertexFunction clipped = f.cwiseMax(0.0).cwiseMin(1.0);
    MarkovCheck c;
    c.energy_before = energy(form, f, f);
    c.energy_after = energy(form, clipped, clipped);
    c.holds = c.energy_after <= c.energy_before * (1.0 + 1e-14) + 1e-300;
    return c;
}

struct LocalityCheck {
    bool precondition_ok = false;  // f constant on region and its neighbors
    double gamma_on_region = 0.0;
    bool holds = false;
};

/// Strong locality: if f is constant on the region plus its graph neighbors,
/// the energy measure vanishes on the region, exactly.
inline LocalityCheck check_strong_locality(const EnergyForm& form, const VertexFunction& f,
                                           const std::vector<VertexId>& region) {
    LocalityCheck c;
    if (region.empty()) {
        c.precondition_ok = true;
        c.holds = true;
        return c;
    }
    double value = f[region.front()];
    c.precondition_ok = true;
    for (VertexId v : region) {
        if (f[v] != value) c.precondition_ok = false;
        for (const auto& nb : form.graph->neighbors(v))
            if (f[nb.to] != value) c.precondition_ok = false;
    }
    if (!c.precondition_ok) return c;
    EnergyMeasure m = p_energy_measure(form, f);
    c.gamma_on_region = measure_on(m, region);
    c.holds = c.gamma_on_region == 0.0;
    return c;
}

/// Residual of the defining identity of Dirichlet-form energy measures,
/// int phi dGamma<f> = E(f, f phi) - (1/2) E(f^2, phi). Exact (up to round-off)
/// for the half-edge split.
inline double energy_measure_identity_residual(const EnergyForm& form,
                                               const VertexFunction& f,
                                               const VertexFunction& phi) {
    if (form.p != 2.0)
        throw std::invalid_argument("energy-measure identity is a p = 2 statement");
    EnergyMeasure m = p_energy_measure(form, f);
    double lhs = 0.0;
    for (VertexId v = 0; v < form.graph->vertex_count(); ++v)
        lhs += phi[v] * m.weights[v];
    VertexFunction fphi = f.cwiseProduct(phi);
    VertexFunction f2 = f.cwiseProduct(f);
    double rhs = energy(form, f, fphi) - 0.5 * energy(form, f2, phi);
    return std::abs(lhs - rhs);
}

/// Generator L with (Lf)(x) = mu(x)^-1 sum_y c_xy (f(x) - f(y)), stored through
/// the conductance Laplacian A (f' A g = E(f,g)) and its mu-symmetrization
/// Ls = D^-1/2 A D^-1/2, which standard symmetric solvers accept.
struct Generator {
    const MetricMeasureGraph* graph = nullptr;
    Eigen::SparseMatrix<double> A;
    Eigen::SparseMatrix<double> Ls;
    Eigen::VectorXd mu, sqrt_mu, inv_sqrt_mu;

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
        return (A * f).cwiseQuotient(mu);
    }
};

inline Generator assemble_generator(const EnergyForm& form) {
    if (form.p != 2.0) throw std::invalid_argument("the generator is a p = 2 object");
    const MetricMeasureGraph& g = *form.graph;
    int n = g.vertex_count();
    Generator gen;
    gen.graph = &g;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(g.edges().size() * 4);
    for (const Edge& e : g.edges()) {
        trips.emplace_back(e.u, e.u, e.conductance);
        trips.emplace_back(e.v, e.v, e.conductance);
        trips.emplace_back(e.u, e.v, -e.conductance);
        trips.emplace_back(e.v, e.u, -e.conductance);
    }
    gen.A.resize(n, n);
    gen.A.setFromTriplets(trips.begin(), trips.end());
    gen.mu = Eigen::Map<const Eigen::VectorXd>(g.mu().data(), n);
    gen.sqrt_mu = gen.mu.cwiseSqrt();
    gen.inv_sqrt_mu = gen.sqrt_mu.cwiseInverse();
    Eigen::SparseMatrix<double> Dm = gen.inv_sqrt_mu.asDiagonal() * gen.A;
    gen.Ls = Dm * Eigen::SparseMatrix<double>(gen.inv_sqrt_mu.asDiagonal());
    return gen;
}

}  // namespace subgauss
