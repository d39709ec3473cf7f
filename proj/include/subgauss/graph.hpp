#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace subgauss {

using VertexId = std::int32_t;

enum class Family { path, lattice2d, gasket, vicsek, custom };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::path: return "path";
        case Family::lattice2d: return "lattice2d";
        case Family::gasket: return "gasket";
        case Family::vicsek: return "vicsek";
        default: return "custom";
    }
}

struct Edge {
    VertexId u = -1;
    VertexId v = -1;
    double conductance = 1.0;
    double length = 1.0;
};

/// Open ball B(x,r) = { y : d(x,y) < r }. Members are sorted by vertex id.
struct Ball {
    VertexId center = -1;
    double radius = 0.0;
    std::vector<VertexId> members;

    bool contains(VertexId v) const {
        return std::binary_search(members.begin(), members.end(), v);
    }
    std::size_t size() const { return members.size(); }
};

/// Vertices ordered by distance from one center; prefix positions answer
/// ball-membership and weighted ball-mass queries in O(log n).
struct CenterIndex {
    std::vector<VertexId> order;  // sorted by (distance, id)
    std::vector<double> dist;     // distances in the same order

    std::size_t count_lt(double r) const {
        return static_cast<std::size_t>(
            std::lower_bound(dist.begin(), dist.end(), r) - dist.begin());
    }
};

/// Finite weighted graph playing the role of a metric measure space (X, d, mu):
/// shortest-path metric from edge lengths, per-vertex measure, per-edge
/// conductances feeding the energy form. Construction validates positivity and
/// connectivity; after that the object is immutable (distance rows and center
/// indexes are cached lazily behind a shared mutex, safe for concurrent reads).
class MetricMeasureGraph {
public:
    MetricMeasureGraph(int n, std::vector<Edge> edges, std::vector<double> mu,
                       Family family = Family::custom,
                       std::vector<std::pair<double, double>> coords = {})
        : n_(n), edges_(std::move(edges)), mu_(std::move(mu)),
          coords_(std::move(coords)), family_(family) {
        if (n_ < 1) throw std::invalid_argument("graph needs at least one vertex");
        if (static_cast<int>(mu_.size()) != n_)
            throw std::invalid_argument("mu size mismatch");
        for (double m : mu_)
            if (!(m > 0.0)) throw std::invalid_argument("vertex measures must be positive");
        adj_.assign(n_, {});
        for (const Edge& e : edges_) {
            if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_ || e.u == e.v)
                throw std::invalid_argument("bad edge endpoints");
            if (!(e.conductance > 0.0) || !(e.length > 0.0))
                throw std::invalid_argument("conductances and lengths must be positive");
            adj_[e.u].push_back({e.v, e.conductance, e.length});
            adj_[e.v].push_back({e.u, e.conductance, e.length});
        }
        if (!connected()) throw std::invalid_argument("graph must be connected");
        total_mass_ = 0.0;
        for (double m : mu_) total_mass_ += m;
        min_edge_length_ = std::numeric_limits<double>::infinity();
        for (const Edge& e : edges_) min_edge_length_ = std::min(min_edge_length_, e.length);
        if (edges_.empty()) min_edge_length_ = 0.0;
        rows_.resize(n_);
        centers_.resize(n_);
    }

    struct Neighbor {
        VertexId to;
        double conductance;
        double length;
    };

    int vertex_count() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Neighbor>& neighbors(VertexId v) const { return adj_[v]; }
    double mu(VertexId v) const { return mu_[v]; }
    const std::vector<double>& mu() const { return mu_; }
    double total_mass() const { return total_mass_; }
    double min_edge_length() const { return min_edge_length_; }
    Family family() const { return family_; }
    bool has_coords() const { return !coords_.empty(); }
    const std::vector<std::pair<double, double>>& coords() const { return coords_; }

    const std::vector<double>& distance_row(VertexId x) const {
        {
            std::shared_lock lock(mutex_);
            if (rows_[x]) return *rows_[x];
        }
        auto row = std::make_unique<std::vector<double>>(dijkstra(x));
        std::unique_lock lock(mutex_);
        if (!rows_[x]) rows_[x] = std::move(row);
        return *rows_[x];
    }

    double distance(VertexId x, VertexId y) const { return distance_row(x)[y]; }

    const CenterIndex& center_index(VertexId x) const {
        {
            std::shared_lock lock(mutex_);
            if (centers_[x]) return *centers_[x];
        }
        const std::vector<double>& d = distance_row(x);
        auto ci = std::make_unique<CenterIndex>();
        ci->order.resize(n_);
        for (VertexId v = 0; v < n_; ++v) ci->order[v] = v;
        std::sort(ci->order.begin(), ci->order.end(), [&](VertexId a, VertexId b) {
            if (d[a] != d[b]) return d[a] < d[b];
            return a < b;
        });
        ci->dist.resize(n_);
        for (int i = 0; i < n_; ++i) ci->dist[i] = d[ci->order[i]];
        std::unique_lock lock(mutex_);
        if (!centers_[x]) centers_[x] = std::move(ci);
        return *centers_[x];
    }

    double eccentricity(VertexId x) const {
        const auto& d = distance_row(x);
        return *std::max_element(d.begin(), d.end());
    }

    double diameter() const {
        std::call_once(diam_once_, [this]() {
            double d = 0.0;
            for (VertexId x = 0; x < n_; ++x) d = std::max(d, eccentricity(x));
            diam_ = d;
        });
        return diam_;
    }

    double ball_mass(VertexId x, double r) const {
        const CenterIndex& ci = center_index(x);
        std::size_t k = ci.count_lt(r);
        const std::vector<double>& pre = mu_prefix(x);
        return pre[k];
    }

    /// Prefix sums of mu in distance order from x; entry k = mu of the first k
    /// vertices of center_index(x).order.
    const std::vector<double>& mu_prefix(VertexId x) const {
        {
            std::shared_lock lock(mutex_);
            if (x < static_cast<VertexId>(mu_prefix_.size()) && mu_prefix_[x])
                return *mu_prefix_[x];
        }
        const CenterIndex& ci = center_index(x);
        auto pre = std::make_unique<std::vector<double>>(n_ + 1, 0.0);
        for (int i = 0; i < n_; ++i)
            (*pre)[i + 1] = (*pre)[i] + mu_[ci.order[i]];
        std::unique_lock lock(mutex_);
        if (mu_prefix_.empty()) mu_prefix_.resize(n_);
        if (!mu_prefix_[x]) mu_prefix_[x] = std::move(pre);
        return *mu_prefix_[x];
    }

private:
    bool connected() const {
        std::vector<char> seen(n_, 0);
        std::vector<VertexId> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (const Neighbor& nb : adj_[v])
                if (!seen[nb.to]) {
                    seen[nb.to] = 1;
                    ++count;
                    stack.push_back(nb.to);
                }
        }
        return count == n_;
    }

    std::vector<double> dijkstra(VertexId src) const {
        std::vector<double> dist(n_, std::numeric_limits<double>::infinity());
        dist[src] = 0.0;
        using Item = std::pair<double, VertexId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, src});
        while (!pq.empty()) {
            auto [d, v] = pq.top();
            pq.pop();
            if (d > dist[v]) continue;
            for (const Neighbor& nb : adj_[v]) {
                double nd = d + nb.length;
                if (nd < dist[nb.to]) {
                    dist[nb.to] = nd;
                    pq.push({nd, nb.to});
                }
            }
        }
        return dist;
    }

    int n_;
    std::vector<Edge> edges_;
    std::vector<double> mu_;
    std::vector<std::pair<double, double>> coords_;
    Family family_;
    std::vector<std::vector<Neighbor>> adj_;
    double total_mass_ = 0.0;
    double min_edge_length_ = 0.0;

    mutable std::shared_mutex mutex_;
    mutable std::vector<std::unique_ptr<std::vector<double>>> rows_;
    mutable std::vector<std::unique_ptr<CenterIndex>> centers_;
    mutable std::vector<std::unique_ptr<std::vector<double>>> mu_prefix_;
    mutable std::once_flag diam_once_;
    mutable double diam_ = 0.0;
};

/// Open ball with the paper's strict-inequality convention d(x,y) < r.
inline Ball ball(const MetricMeasureGraph& g, VertexId x, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const CenterIndex& ci = g.center_index(x);
    std::size_t k = ci.count_lt(r);
    Ball b;
    b.center = x;
    b.radius = r;
    b.members.assign(ci.order.begin(), ci.order.begin() + k);
    std::sort(b.members.begin(), b.members.end());
    return b;
}

/// Smallest ball around x containing exactly { y : d(x,y) <= d_max }; the
/// radius is placed halfway to the next distinct distance.
inline Ball enclosing_ball(const MetricMeasureGraph& g, VertexId x, double d_max) {
    const CenterIndex& ci = g.center_index(x);
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(ci.dist.begin(), ci.dist.end(), d_max) - ci.dist.begin());
    double r;
    if (k < ci.dist.size())
        r = 0.5 * (d_max + ci.dist[k]);
    else
        r = d_max + std::max(g.min_edge_length(), 0.5 * d_max) + 1.0;
    Ball b;
    b.center = x;
    b.radius = r;
    b.members.assign(ci.order.begin(), ci.order.begin() + k);
    std::sort(b.members.begin(), b.members.end());
    return b;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline MetricMeasureGraph build_path(int n, double edge_length = 1.0) {
    if (n < 2) throw std::invalid_argument("path needs n >= 2");
    if (!(edge_length > 0.0)) throw std::invalid_argument("edge length must be positive");
    std::vector<Edge> edges;
    edges.reserve(n - 1);
    std::vector<std::pair<double, double>> coords;
    coords.reserve(n);
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0, edge_length});
    for (int i = 0; i < n; ++i) coords.push_back({i * edge_length, 0.0});
    return MetricMeasureGraph(n, std::move(edges), std::vector<double>(n, 1.0),
                              Family::path, std::move(coords));
}

inline MetricMeasureGraph build_lattice2d(int n) {
    if (n < 2) throw std::invalid_argument("lattice needs n >= 2");
    auto id = [n](int i, int j) { return i * n + j; };
    std::vector<Edge> edges;
    std::vector<std::pair<double, double>> coords(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            coords[id(i, j)] = {double(i), double(j)};
            if (i + 1 < n) edges.push_back({id(i, j), id(i + 1, j), 1.0, 1.0});
            if (j + 1 < n) edges.push_back({id(i, j), id(i, j + 1), 1.0, 1.0});
        }
    return MetricMeasureGraph(n * n, std::move(edges), std::vector<double>(n * n, 1.0),
                              Family::lattice2d, std::move(coords));
}

namespace detail {

// Integer lattice key used to deduplicate glue vertices in the fractal builders.
struct PointKey {
    long long i, j;
    bool operator<(const PointKey& o) const {
        return i != o.i ? i < o.i : j < o.j;
    }
};

}  // namespace detail

/// Level-L Sierpinski gasket approximation. Edge lengths 2^-L (diameter 1),
/// conductances (5/3)^L so effective resistances are level-consistent, cell
/// measure 3^-L split equally over the three corners of each cell
/// (total mass 1). Pass renormalized=false to keep unit conductances; that
/// variant is the negative control for level-stability experiments.
inline MetricMeasureGraph build_gasket(int level, bool renormalized = true,
                                       int vertex_cap = 200000) {
    if (level < 0) throw std::invalid_argument("gasket level must be >= 0");
    double vcount = 1.5 * (std::pow(3.0, level) + 1.0);
    if (vcount > vertex_cap)
        throw std::runtime_error("gasket level exceeds the configured vertex cap");

    // Cells as integer corner triples in the basis e1=(1,0), e2=(1/2, sqrt3/2),
    // scaled by 2^level.
    using detail::PointKey;
    struct Cell { PointKey a, b, c; };
    long long side = 1LL << level;
    std::vector<Cell> cells{{PointKey{0, 0}, PointKey{side, 0}, PointKey{0, side}}};
    for (int l = 0; l < level; ++l) {
        std::vector<Cell> next;
        next.reserve(cells.size() * 3);
        for (const Cell& c : cells) {
            PointKey ab{(c.a.i + c.b.i) / 2, (c.a.j + c.b.j) / 2};
            PointKey bc{(c.b.i + c.c.i) / 2, (c.b.j + c.c.j) / 2};
            PointKey ca{(c.c.i + c.a.i) / 2, (c.c.j + c.a.j) / 2};
            next.push_back({c.a, ab, ca});
            next.push_back({ab, c.b, bc});
            next.push_back({ca, bc, c.c});
        }
        cells = std::move(next);
    }

    std::map<PointKey, VertexId> ids;
    auto get_id = [&ids](const PointKey& p) {
        auto [it, inserted] = ids.emplace(p, static_cast<VertexId>(ids.size()));
        return it->second;
    };
    for (const Cell& c : cells) { get_id(c.a); get_id(c.b); get_id(c.c); }

    int n = static_cast<int>(ids.size());
    double len = std::pow(2.0, -level);
    double cond = renormalized ? std::pow(5.0 / 3.0, level) : 1.0;
    double cell_mass = std::pow(3.0, -level);

    std::vector<Edge> edges;
    edges.reserve(cells.size() * 3);
    std::vector<double> mu(n, 0.0);
    for (const Cell& c : cells) {
        VertexId a = get_id(c.a), b = get_id(c.b), cc = get_id(c.c);
        edges.push_back({a, b, cond, len});
        edges.push_back({b, cc, cond, len});
        edges.push_back({cc, a, cond, len});
        mu[a] += cell_mass / 3.0;
        mu[b] += cell_mass / 3.0;
        mu[cc] += cell_mass / 3.0;
    }

    double scale = std::pow(2.0, -level);
    std::vector<std::pair<double, double>> coords(n);
    for (const auto& [key, id] : ids)
        coords[id] = {scale * (key.i + 0.5 * key.j), scale * (0.8660254037844386 * key.j)};

    return MetricMeasureGraph(n, std::move(edges), std::move(mu), Family::gasket,
                              std::move(coords));
}

/// Level-L Vicsek tree. Edge lengths 3^-L, conductances 3^L (tree resistance
/// renormalization), cell measure 5^-L split over the five vertices of each
/// cross-shaped cell.
inline MetricMeasureGraph build_vicsek(int level, int vertex_cap = 200000) {
    if (level < 0) throw std::invalid_argument("vicsek level must be >= 0");
    if (3.0 * std::pow(5.0, level) + 2.0 > vertex_cap)
        throw std::runtime_error("vicsek level exceeds the configured vertex cap");

    // Cells are axis-aligned squares [x,x+s]^2 in units of 3^-level; each cell
    // contributes an X: center joined to the four corners.
    using detail::PointKey;
    struct Cell { long long x, y, s; };
    long long side = 1;
    for (int l = 0; l < level; ++l) side *= 3;
    std::vector<Cell> cells{{0, 0, side}};
    for (int l = 0; l < level; ++l) {
        std::vector<Cell> next;
        next.reserve(cells.size() * 5);
        for (const Cell& c : cells) {
            long long s = c.s / 3;
            next.push_back({c.x, c.y, s});
            next.push_back({c.x + 2 * s, c.y, s});
            next.push_back({c.x, c.y + 2 * s, s});
            next.push_back({c.x + 2 * s, c.y + 2 * s, s});
            next.push_back({c.x + s, c.y + s, s});
        }
        cells = std::move(next);
    }

    // Double the coordinates so cell centers are integral.
    std::map<PointKey, VertexId> ids;
    auto get_id = [&ids](long long i, long long j) {
        auto [it, inserted] = ids.emplace(PointKey{i, j}, static_cast<VertexId>(ids.size()));
        return it->second;
    };

    double len = std::pow(3.0, -level);
    double cond = std::pow(3.0, level);
    double cell_mass = std::pow(5.0, -level);

    std::vector<Edge> edges;
    std::vector<double> mu;
    auto bump = [&mu](VertexId v, double m) {
        if (static_cast<std::size_t>(v) >= mu.size()) mu.resize(v + 1, 0.0);
        mu[v] += m;
    };
    for (const Cell& c : cells) {
        VertexId corners[4] = {
            get_id(2 * c.x, 2 * c.y),
            get_id(2 * (c.x + c.s), 2 * c.y),
            get_id(2 * c.x, 2 * (c.y + c.s)),
            get_id(2 * (c.x + c.s), 2 * (c.y + c.s))};
        VertexId center = get_id(2 * c.x + c.s, 2 * c.y + c.s);
        for (VertexId corner : corners) {
            edges.push_back({center, corner, cond, len});
            bump(corner, cell_mass / 5.0);
        }
        bump(center, cell_mass / 5.0);
    }

    int n = static_cast<int>(ids.size());
    double scale = 0.5 * std::pow(3.0, -level);
    std::vector<std::pair<double, double>> coords(n);
    for (const auto& [key, id] : ids) coords[id] = {scale * key.i, scale * key.j};

    return MetricMeasureGraph(n, std::move(edges), std::move(mu), Family::vicsek,
                              std::move(coords));
}

inline MetricMeasureGraph build_family(Family f, int level_or_size,
                                       bool renormalized = true) {
    switch (f) {
        case Family::path: return build_path(level_or_size);
        case Family::lattice2d: return build_lattice2d(level_or_size);
        case Family::gasket: return build_gasket(level_or_size, renormalized);
        case Family::vicsek: return build_vicsek(level_or_size);
        default: throw std::invalid_argument("build_family: custom graphs come from files");
    }
}

// ---------------------------------------------------------------------------
// Radius grids
// ---------------------------------------------------------------------------

/// Midpoints between consecutive distinct pairwise distances, plus the diameter;
/// hits every combinatorially distinct ball at every center.
inline std::vector<double> combinatorial_radii(const MetricMeasureGraph& g) {
    std::vector<double> ds;
    int n = g.vertex_count();
    ds.reserve(static_cast<std::size_t>(n) * n / 2);
    for (VertexId x = 0; x < n; ++x) {
        const auto& row = g.distance_row(x);
        for (VertexId y = x + 1; y < n; ++y) ds.push_back(row[y]);
    }
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    std::vector<double> radii;
    radii.reserve(ds.size() + 1);
    if (!ds.empty()) radii.push_back(0.5 * ds.front());
    for (std::size_t i = 0; i + 1 < ds.size(); ++i)
        radii.push_back(0.5 * (ds[i] + ds[i + 1]));
    if (!ds.empty()) radii.push_back(ds.back());
    return radii;
}

inline std::vector<double> geometric_radii(double lo, double hi, int per_decade = 16) {
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("bad radius range");
    std::vector<double> radii;
    double decades = std::log10(hi / lo);
    int count = std::max(2, static_cast<int>(std::ceil(decades * per_decade)) + 1);
    for (int i = 0; i < count; ++i)
        radii.push_back(lo * std::pow(hi / lo, double(i) / (count - 1)));
    return radii;
}

// ---------------------------------------------------------------------------
// Text format: header "n m", then m lines "u v conductance length",
// then n lines "vertex mu [x y]".
// ---------------------------------------------------------------------------

inline void save_graph(const MetricMeasureGraph& g, std::ostream& out) {
    out.precision(17);
    out << g.vertex_count() << ' ' << g.edges().size() << '\n';
    for (const Edge& e : g.edges())
        out << e.u << ' ' << e.v << ' ' << e.conductance << ' ' << e.length << '\n';
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        out << v << ' ' << g.mu(v);
        if (g.has_coords())
            out << ' ' << g.coords()[v].first << ' ' << g.coords()[v].second;
        out << '\n';
    }
}

inline void save_graph(const MetricMeasureGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_graph(g, out);
}

inline MetricMeasureGraph load_graph(std::istream& in) {
    int n = 0;
    std::size_t m = 0;
    if (!(in >> n >> m)) throw std::runtime_error("graph file: bad header");
    std::vector<Edge> edges(m);
    for (std::size_t i = 0; i < m; ++i) {
        Edge& e = edges[i];
        if (!(in >> e.u >> e.v >> e.conductance >> e.length))
            throw std::runtime_error("graph file: bad edge line " + std::to_string(i + 2));
    }
    std::vector<double> mu(n, 0.0);
    std::vector<std::pair<double, double>> coords;
    std::string line;
    std::getline(in, line);  // finish the last edge line
    int seen = 0;
    while (seen < n && std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        int v;
        double muv, x, y;
        if (!(ls >> v >> muv)) throw std::runtime_error("graph file: bad vertex line");
        if (v < 0 || v >= n) throw std::runtime_error("graph file: vertex id out of range");
        mu[v] = muv;
        if (ls >> x >> y) {
            if (coords.empty()) coords.resize(n, {0.0, 0.0});
            coords[v] = {x, y};
        }
        ++seen;
    }
    if (seen != n) throw std::runtime_error("graph file: missing vertex lines");
    return MetricMeasureGraph(n, std::move(edges), std::move(mu), Family::custom,
                              std::move(coords));
}

inline MetricMeasureGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_graph(in);
}

}  // namespace subgauss
