#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subgauss/graph.hpp"

namespace subgauss {

/// Radial scale function r -> Psi(r): power law Psi(r) = r^beta or a tabulated
/// increasing function interpolated log-log (end slopes extrapolate). beta_L
/// and beta_U are certified exponents: exact for the power kind, min/max
/// segment slopes for tables, so the doubling-type bounds hold with C = 1 on
/// the table grid.
class ScaleFunction {
public:
    enum class Kind { power, tabulated };

    static ScaleFunction power(double beta) {
        if (!(beta > 0.0)) throw std::invalid_argument("scale exponent must be positive");
        ScaleFunction s;
        s.kind_ = Kind::power;
        s.beta_ = beta;
        s.beta_lower_ = beta;
        s.beta_upper_ = beta;
        return s;
    }

    static ScaleFunction tabulated(std::vector<std::pair<double, double>> table) {
        if (table.size() < 2) throw std::invalid_argument("scale table needs >= 2 rows");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!(table[i].first > 0.0) || !(table[i].second > 0.0))
                throw std::invalid_argument("scale table entries must be positive (row " +
                                            std::to_string(i + 1) + ")");
            if (i > 0 && !(table[i].first > table[i - 1].first &&
                           table[i].second > table[i - 1].second))
                throw std::invalid_argument("scale table must be strictly increasing (row " +
                                            std::to_string(i + 1) + ")");
        }
        ScaleFunction s;
        s.kind_ = Kind::tabulated;
        s.table_ = std::move(table);
        s.beta_lower_ = std::numeric_limits<double>::infinity();
        s.beta_upper_ = 0.0;
        for (std::size_t i = 0; i + 1 < s.table_.size(); ++i) {
            double slope = std::log(s.table_[i + 1].second / s.table_[i].second) /
                           std::log(s.table_[i + 1].first / s.table_[i].first);
            s.beta_lower_ = std::min(s.beta_lower_, slope);
            s.beta_upper_ = std::max(s.beta_upper_, slope);
        }
        return s;
    }

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }
    double beta_lower() const { return beta_lower_; }
    double beta_upper() const { return beta_upper_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    double operator()(double r) const {
        if (!(r > 0.0)) throw std::invalid_argument("scale function needs r > 0");
        if (kind_ == Kind::power) return std::pow(r, beta_);
        return interp(std::log(r));
    }

    double inverse(double t) const {
        if (!(t > 0.0)) throw std::invalid_argument("scale inverse needs t > 0");
        if (kind_ == Kind::power) return std::pow(t, 1.0 / beta_);
        // Log-log piecewise linear functions invert segment by segment.
        double lt = std::log(t);
        std::size_t k = 0;
        while (k + 2 < table_.size() && std::log(table_[k + 1].second) < lt) ++k;
        double lx0 = std::log(table_[k].first), lx1 = std::log(table_[k + 1].first);
        double ly0 = std::log(table_[k].second), ly1 = std::log(table_[k + 1].second);
        double slope = (ly1 - ly0) / (lx1 - lx0);
        return std::exp(lx0 + (lt - ly0) / slope);
    }

    /// Phi(s) = sup_{r > 0} (s/r - 1/Psi(r)). Closed form for the power kind:
    /// Phi(s) = (beta - 1) (s / beta)^(beta / (beta - 1)); direct numerical
    /// maximization for tables.
    double phi(double s) const {
        if (s <= 0.0) return 0.0;
        if (kind_ == Kind::power) {
            if (beta_ <= 1.0)
                throw std::invalid_argument("Phi needs a scale exponent > 1");
            return (beta_ - 1.0) * std::pow(s / beta_, beta_ / (beta_ - 1.0));
        }
        return phi_numeric(s);
    }

    /// Grid + golden-section maximization of s/r - 1/Psi(r); also the oracle
    /// the power closed form is tested against.
    double phi_numeric(double s, double r_lo = 1e-9, double r_hi = 1e9) const {
        auto value = [&](double r) { return s / r - 1.0 / (*this)(r); };
        double best_r = r_lo, best = value(r_lo);
        int grid = 400;
        for (int i = 0; i <= grid; ++i) {
            double r = r_lo * std::pow(r_hi / r_lo, double(i) / grid);
            double v = value(r);
            if (v > best) { best = v; best_r = r; }
        }
        double a = best_r / std::pow(r_hi / r_lo, 1.0 / grid);
        double b = best_r * std::pow(r_hi / r_lo, 1.0 / grid);
        const double gr = 0.6180339887498949;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        for (int it = 0; it < 200; ++it) {
            if (value(c) > value(d)) b = d; else a = c;
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        return std::max(best, value(0.5 * (a + b)));
    }

private:
    double interp(double lr) const {
        std::size_t k = 0;
        while (k + 2 < table_.size() && std::log(table_[k + 1].first) < lr) ++k;
        double lx0 = std::log(table_[k].first), lx1 = std::log(table_[k + 1].first);
        double ly0 = std::log(table_[k].second), ly1 = std::log(table_[k + 1].second);
        double w = (lr - lx0) / (lx1 - lx0);
        return std::exp(ly0 + w * (ly1 - ly0));
    }

    Kind kind_ = Kind::power;
    double beta_ = 2.0;
    double beta_lower_ = 2.0;
    double beta_upper_ = 2.0;
    std::vector<std::pair<double, double>> table_;
};

// ---------------------------------------------------------------------------
// Spatial scale functions Theta(x, r). The two-measure theorems quantify over
// these; several canonical choices depend on x through ball volumes.
// ---------------------------------------------------------------------------

using SpatialScale = std::function<double(VertexId, double)>;

inline SpatialScale constant_theta(double c = 1.0) {
    return [c](VertexId, double) { return c; };
}

inline SpatialScale radial_theta(ScaleFunction psi, double exponent = 1.0) {
    return [psi = std::move(psi), exponent](VertexId, double r) {
        return std::pow(psi(r), exponent);
    };
}

/// Theta = (Psi / mu(B))^(1/p): the Morrey regime scale.
inline SpatialScale morrey_theta(const MetricMeasureGraph& g, ScaleFunction psi, double p) {
    return [&g, psi = std::move(psi), p](VertexId x, double r) {
        return std::pow(psi(r) / g.ball_mass(x, r), 1.0 / p);
    };
}

/// Theta = mu(B)^(1/q - 1/p) Psi^(1/p): the Sobolev-Poincare scale.
inline SpatialScale sobolev_theta(const MetricMeasureGraph& g, ScaleFunction psi,
                                  double p, double q) {
    return [&g, psi = std::move(psi), p, q](VertexId x, double r) {
        return std::pow(g.ball_mass(x, r), 1.0 / q - 1.0 / p) * std::pow(psi(r), 1.0 / p);
    };
}

/// Theta = (r/R)^(delta/q) (mu(B)/Psi)^(1/q - 1/2): the self-improvement scale.
inline SpatialScale self_improvement_theta(const MetricMeasureGraph& g, ScaleFunction psi,
                                           double R, double delta, double q) {
    return [&g, psi = std::move(psi), R, delta, q](VertexId x, double r) {
        return std::pow(r / R, delta / q) *
               std::pow(g.ball_mass(x, r) / psi(r), 1.0 / q - 0.5);
    };
}

}  // namespace subgauss
