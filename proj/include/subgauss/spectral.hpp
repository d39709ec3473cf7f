#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "subgauss/energy.hpp"
#include "subgauss/graph.hpp"

namespace subgauss {

struct SpectralOptions {
    int dense_cap = 4096;     // full dense decomposition up to this size
    int k = -1;               // retained pairs for the iterative path
    int lanczos_extra = 60;   // extra Krylov directions beyond k
    double residual_tol = 1e-8;
};

/// Eigenpairs of the generator, mu-orthonormal. The constant mode is pinned
/// to eigenvalue exactly 0.
struct Spectrum {
    const MetricMeasureGraph* graph = nullptr;
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns phi_k with <phi_j, phi_k>_mu = delta_jk
    std::string method_tag;        // dense | iterative

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail {

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            arg = i;
        }
    if (v[arg] < 0.0) v = -v;
}

inline Spectrum spectrum_from_symmetrized(const Generator& gen,
                                          const Eigen::VectorXd& vals,
                                          const Eigen::MatrixXd& vecs,
                                          const std::string& tag) {
    Spectrum s;
    s.graph = gen.graph;
    s.method_tag = tag;
    s.eigenvalues = vals;
    s.eigenvectors = gen.inv_sqrt_mu.asDiagonal() * vecs;
    for (int k = 0; k < s.eigenvectors.cols(); ++k)
        fix_sign(s.eigenvectors.col(k));
    // Pin the constant mode: lambda_0 = 0 and phi_0 = mu(X)^(-1/2).
    if (s.count() > 0) {
        s.eigenvalues[0] = 0.0;
        s.eigenvectors.col(0).setConstant(1.0 / std::sqrt(gen.mu.sum()));
    }
    return s;
}

/// Lanczos with full reorthogonalization on c I - Ls, so the lowest part of
/// the spectrum converges first.
inline Spectrum lanczos_lowest(const Generator& gen, const SpectralOptions& opt) {
    const int n = gen.Ls.rows();
    const int k = opt.k;
    if (k < 1 || k > n) throw std::invalid_argument("iterative spectrum needs explicit k in [1, n]");
    double shift = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(gen.Ls, i); it; ++it)
            row += std::abs(it.value());
        shift = std::max(shift, row);
    }
    shift *= 1.05;

    int m = std::min(n, k + opt.lanczos_extra);
    Eigen::MatrixXd V(n, m);
    Eigen::VectorXd alpha(m), beta(m);
    // Deterministic pseudo-random start.
    Eigen::VectorXd v0(n);
    std::uint64_t state = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(n);
    for (int i = 0; i < n; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        v0[i] = (double((state >> 11) & 0xfffffffffffffull) / double(1ull << 52)) - 0.5;
    }
    v0.normalize();
    V.col(0) = v0;
    Eigen::VectorXd w;
    int steps = m;
    for (int j = 0; j < m; ++j) {
        w = shift * V.col(j) - gen.Ls * V.col(j);
        alpha[j] = V.col(j).dot(w);
        w -= alpha[j] * V.col(j);
        if (j > 0) w -= beta[j - 1] * V.col(j - 1);
        // Full reorthogonalization, twice.
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= (V.col(i).dot(w)) * V.col(i);
        double nb = w.norm();
        beta[j] = nb;
        if (j + 1 < m) {
            if (nb < 1e-13) { steps = j + 1; break; }
            V.col(j + 1) = w / nb;
        }
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
        T(j, j) = alpha[j];
        if (j + 1 < steps) {
            T(j, j + 1) = beta[j];
            T(j + 1, j) = beta[j];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw std::runtime_error("lanczos: tridiagonal solve failed");

    // Largest Ritz values of (shift I - Ls) are the lowest eigenvalues of Ls.
    if (steps < k) throw std::runtime_error("lanczos: Krylov space exhausted before k pairs");
    Eigen::VectorXd vals(k);
    Eigen::MatrixXd vecs(n, k);
    for (int i = 0; i < k; ++i) {
        int src = steps - 1 - i;
        vals[i] = shift - es.eigenvalues()[src];
        vecs.col(i) = V.leftCols(steps) * es.eigenvectors().col(src);
        vecs.col(i).normalize();
    }
    // Residual diagnostics for every retained pair.
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
        double res = (gen.Ls * vecs.col(i) - vals[i] * vecs.col(i)).norm();
        worst = std::max(worst, res);
    }
    if (worst > opt.residual_tol * std::max(1.0, vals[k - 1]))
        throw std::runtime_error("lanczos failed to converge: worst residual " +
                                 std::to_string(worst) + " for k = " + std::to_string(k));
    return spectrum_from_symmetrized(gen, vals, vecs, "iterative");
}

}  // namespace detail

/// Full dense decomposition (tridiagonalization + implicit QL via Eigen) in the
/// mu-symmetrized variable up to dense_cap vertices; Lanczos with full
/// reorthogonalization and explicit k beyond.
inline Spectrum eigendecompose(const Generator& gen, const SpectralOptions& opt = {}) {
    int n = gen.Ls.rows();
    if (n <= opt.dense_cap) {
        Eigen::MatrixXd dense = Eigen::MatrixXd(gen.Ls);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("dense eigendecomposition failed");
        return detail::spectrum_from_symmetrized(gen, es.eigenvalues(), es.eigenvectors(),
                                                 "dense");
    }
    return detail::lanczos_lowest(gen, opt);
}

// ---------------------------------------------------------------------------
// Heat kernel
// ---------------------------------------------------------------------------

/// p_t(x,y) = sum_k exp(-lambda_k t) phi_k(x) phi_k(y); symmetric by formula.
inline double heat_kernel(const Spectrum& s, double t, VertexId x, VertexId y) {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel needs t > 0");
    double acc = 0.0;
    for (int k = 0; k < s.count(); ++k)
        acc += std::exp(-s.eigenvalues[k] * t) * s.eigenvectors(x, k) * s.eigenvectors(y, k);
    return acc;
}

inline Eigen::VectorXd heat_kernel_row(const Spectrum& s, double t, VertexId x) {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel needs t > 0");
    Eigen::VectorXd coeff(s.count());
    for (int k = 0; k < s.count(); ++k)
        coeff[k] = std::exp(-s.eigenvalues[k] * t) * s.eigenvectors(x, k);
    return s.eigenvectors * coeff;
}

/// Evaluation wrapper carrying the spectral contract.
struct HeatKernel {
    const Spectrum* spectrum = nullptr;

    double operator()(double t, VertexId x, VertexId y) const {
        return heat_kernel(*spectrum, t, x, y);
    }
    /// sum_y p_t(x,y) mu(y) - 1 (stochastic completeness defect).
    double mass_defect(double t, VertexId x) const {
        const auto& g = *spectrum->graph;
        Eigen::VectorXd row = heat_kernel_row(*spectrum, t, x);
        double mass = 0.0;
        for (VertexId y = 0; y < g.vertex_count(); ++y) mass += row[y] * g.mu(y);
        return mass - 1.0;
    }
};

// ---------------------------------------------------------------------------
// Resolvent
// ---------------------------------------------------------------------------

struct ResolventInfo {
    int iterations = 0;
    double relative_residual = 0.0;  // in the mu-norm
    std::string method;              // cg | cg+ldlt
};

/// G_lambda phi = (L + lambda)^(-1) phi, lambda > 0. Conjugate gradient with
/// Jacobi preconditioner on the mu-symmetrized SPD system; a direct sparse
/// factorization picks up the rare case where CG stalls above tolerance.
inline VertexFunction resolvent_solve(const Generator& gen, double lambda,
                                      const VertexFunction& phi,
                                      ResolventInfo* info = nullptr) {
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent needs lambda > 0");
    int n = gen.Ls.rows();
    Eigen::VectorXd rhs = gen.sqrt_mu.cwiseProduct(phi);
    double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        if (info) *info = {0, 0.0, "trivial"};
        return Eigen::VectorXd::Zero(n);
    }
    Eigen::SparseMatrix<double> M = gen.Ls;
    for (int i = 0; i < n; ++i) M.coeffRef(i, i) += lambda;
    M.makeCompressed();

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * n + 200);
    cg.compute(M);
    Eigen::VectorXd y = cg.solve(rhs);
    double resid = (M * y - rhs).norm() / rhs_norm;
    std::string method = "cg";
    int iterations = static_cast<int>(cg.iterations());
    if (resid > 1e-11) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
        if (ldlt.info() == Eigen::Success) {
            Eigen::VectorXd y2 = ldlt.solve(rhs);
            double r2 = (M * y2 - rhs).norm() / rhs_norm;
            if (r2 < resid) {
                y = y2;
                resid = r2;
                method = "cg+ldlt";
            }
        }
    }
    if (resid > 1e-8)
        throw std::runtime_error("resolvent solve breakdown: relative residual " +
                                 std::to_string(resid));
    if (info) *info = {iterations, resid, method};
    return gen.inv_sqrt_mu.cwiseProduct(y);
}

/// Residual of E(h,g) = <phi,g>_mu - lambda <h,g>_mu for h = G_lambda phi.
inline double resolvent_identity_residual(const Generator& gen, double lambda,
                                          const VertexFunction& phi,
                                          const VertexFunction& h,
                                          const VertexFunction& gvec) {
    double lhs = gvec.dot(gen.A * h);
    double rhs = phi.cwiseProduct(gvec).dot(gen.mu) - lambda * h.cwiseProduct(gvec).dot(gen.mu);
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Harmonic extension
// ---------------------------------------------------------------------------

/// Energy-minimizing extension of boundary values: (Lu)(x) = 0 on free
/// vertices, so u also obeys the maximum principle. Rejects free components
/// that never touch the boundary.
inline VertexFunction harmonic_extension(const Generator& gen,
                                         const std::map<VertexId, double>& boundary) {
    if (boundary.empty()) throw std::invalid_argument("harmonic_extension: empty boundary");
    const MetricMeasureGraph& g = *gen.graph;
    int n = g.vertex_count();
    std::vector<int> free_index(n, -1);
    std::vector<VertexId> free_list;
    for (VertexId v = 0; v < n; ++v)
        if (!boundary.count(v)) {
            free_index[v] = static_cast<int>(free_list.size());
            free_list.push_back(v);
        }
    VertexFunction u = VertexFunction::Zero(n);
    for (const auto& [v, val] : boundary) u[v] = val;
    if (free_list.empty()) return u;

    // Every free component must contact the boundary.
    {
        std::vector<char> reached(n, 0);
        std::vector<VertexId> stack;
        for (const auto& [v, val] : boundary) { reached[v] = 1; stack.push_back(v); }
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (const auto& nb : g.neighbors(v))
                if (!reached[nb.to]) { reached[nb.to] = 1; stack.push_back(nb.to); }
        }
        for (VertexId v : free_list)
            if (!reached[v])
                throw std::invalid_argument(
                    "harmonic_extension: free component with no boundary contact");
    }

    int nf = static_cast<int>(free_list.size());
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (int i = 0; i < nf; ++i) {
        VertexId v = free_list[i];
        double diag = 0.0;
        for (const auto& nb : g.neighbors(v)) {
            diag += nb.conductance;
            int j = free_index[nb.to];
            if (j >= 0)
                trips.emplace_back(i, j, -nb.conductance);
            else
                rhs[i] += nb.conductance * u[nb.to];
        }
        trips.emplace_back(i, i, diag);
    }
    Eigen::SparseMatrix<double> Aff(nf, nf);
    Aff.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Aff);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("harmonic_extension: factorization failed");
    Eigen::VectorXd uf = solver.solve(rhs);
    for (int i = 0; i < nf; ++i) u[free_list[i]] = uf[i];
    return u;
}

}  // namespace subgauss
