#include "gcnwp/league_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>
#include <unordered_map>

#include <Eigen/Dense>

#include "gcnwp/error.hpp"
#include "gcnwp/kernels.hpp"

namespace gcnwp {

namespace {

SparseMatrix adjacency_from_edges(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        entries.push_back({u, v, 1.0});
        entries.push_back({v, u, 1.0});
    }
    return SparseMatrix::from_entries(n, n, std::move(entries));
}

SparseMatrix scaled_sum(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(a.nnz() + b.nnz());
    for (const SparseMatrix* m : {&a, &b}) {
        const double s = m == &a ? alpha : beta;
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t k = m->row_ptr()[r]; k < m->row_ptr()[r + 1]; ++k)
                entries.push_back({r, m->col_idx()[k], s * m->values()[k]});
    }
    return SparseMatrix::from_entries(a.rows(), a.cols(), std::move(entries));
}

// Node indices of each team in schedule order.
std::map<std::string, std::vector<std::size_t>> team_schedules(const LeagueGraph& graph) {
    std::map<std::string, std::vector<std::size_t>> schedule;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) schedule[graph.nodes[i].team].push_back(i);
    for (auto& [team, idx] : schedule)
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return graph.nodes[a].team_game_index < graph.nodes[b].team_game_index;
        });
    return schedule;
}

}  // namespace

std::size_t LeagueGraph::labeled_count() const {
    return static_cast<std::size_t>(std::count(label_mask.begin(), label_mask.end(), true));
}

std::vector<std::vector<std::size_t>> LeagueGraph::neighbours() const {
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

LeagueGraph build_league_graph(const std::vector<TeamGameRecord>& records) {
    LeagueGraph graph;
    graph.adjacency = SparseMatrix(0);
    if (records.empty()) return graph;

    for (const auto& r : records)
        if (r.league != records.front().league || r.season != records.front().season)
            throw ContractError("build_league_graph: records span more than one league-season");
    validate_pairs(records);

    std::vector<const TeamGameRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return std::tie(a->timestamp, a->game_id, a->team) <
               std::tie(b->timestamp, b->game_id, b->team);
    });

    // Walk each team's games in time order: one node per game, an edge to the
    // opponent's node of the same game and to the team's previous game.
    std::unordered_map<std::string, std::size_t> games_played;
    std::unordered_map<std::string, std::size_t> last_node;
    std::unordered_map<std::string, std::size_t> first_side;  // game_id -> node
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& r = *sorted[i];
        const std::size_t index = games_played[r.team]++;
        graph.nodes.push_back({r.team, r.game_id, index, r.won});

        if (auto it = first_side.find(r.game_id); it != first_side.end()) {
            graph.edges.emplace_back(it->second, i);
        } else {
            first_side.emplace(r.game_id, i);
        }
        if (auto it = last_node.find(r.team); it != last_node.end())
            graph.edges.emplace_back(std::min(it->second, i), std::max(it->second, i));
        last_node[r.team] = i;
    }
    std::sort(graph.edges.begin(), graph.edges.end());
    graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
    graph.adjacency = adjacency_from_edges(graph.nodes.size(), graph.edges);
    graph.labels.assign(graph.nodes.size(), -1);
    graph.label_mask.assign(graph.nodes.size(), false);
    return graph;
}

void attach_features(LeagueGraph& graph, const FeatureMatrix& features) {
    if (features.values.rows() != graph.nodes.size())
        throw ContractError("attach_features: feature rows do not match node count");
    std::map<std::pair<std::string, std::string>, std::size_t> row_of;
    for (std::size_t i = 0; i < features.row_keys.size(); ++i)
        row_of[{features.row_keys[i].team, features.row_keys[i].game_id}] = i;
    graph.features = Matrix(graph.nodes.size(), features.values.cols());
    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        auto it = row_of.find({graph.nodes[n].team, graph.nodes[n].game_id});
        if (it == row_of.end())
            throw ContractError("attach_features: no feature row for " + graph.nodes[n].team + "/" +
                                graph.nodes[n].game_id);
        const auto src = features.values.row(it->second);
        std::copy(src.begin(), src.end(), graph.features.row(n).begin());
    }
}

std::string_view to_string(PropagatorKind k) {
    return k == PropagatorKind::normalized_adjacency ? "gcn" : "gcn-cheby";
}

PropagatorKind parse_propagator_kind(std::string_view s) {
    if (s == "gcn" || s == "normalized_adjacency") return PropagatorKind::normalized_adjacency;
    if (s == "gcn-cheby" || s == "gcn_cheby" || s == "chebyshev") return PropagatorKind::chebyshev;
    throw ConfigError("unknown model kind '" + std::string(s) + "' (expected gcn|gcn-cheby)");
}

Propagator normalized_adjacency(const SparseMatrix& adjacency) {
    const std::size_t n = adjacency.rows();
    std::vector<double> inv_sqrt(n);
    for (std::size_t r = 0; r < n; ++r) {
        double degree = 1.0;  // self loop
        for (std::size_t k = adjacency.row_ptr()[r]; k < adjacency.row_ptr()[r + 1]; ++k)
            if (adjacency.col_idx()[k] != r) degree += adjacency.values()[k];
        inv_sqrt[r] = 1.0 / std::sqrt(degree);
    }
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(adjacency.nnz() + n);
    for (std::size_t r = 0; r < n; ++r) {
        entries.push_back({r, r, inv_sqrt[r] * inv_sqrt[r]});
        for (std::size_t k = adjacency.row_ptr()[r]; k < adjacency.row_ptr()[r + 1]; ++k) {
            const std::size_t c = adjacency.col_idx()[k];
            if (c == r) continue;
            entries.push_back({r, c, inv_sqrt[r] * adjacency.values()[k] * inv_sqrt[c]});
        }
    }
    Propagator p;
    p.kind = PropagatorKind::normalized_adjacency;
    p.matrices.push_back(SparseMatrix::from_entries(n, n, std::move(entries)));
    return p;
}

Propagator normalized_adjacency(const LeagueGraph& graph) {
    if (graph.nodes.empty()) throw ContractError("normalized_adjacency: empty graph");
    return normalized_adjacency(graph.adjacency);
}

SparseMatrix symmetric_laplacian(const SparseMatrix& adjacency) {
    const std::size_t n = adjacency.rows();
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double degree = 0.0;
        for (std::size_t k = adjacency.row_ptr()[r]; k < adjacency.row_ptr()[r + 1]; ++k)
            degree += adjacency.values()[k];
        inv_sqrt[r] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
    }
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t r = 0; r < n; ++r) {
        entries.push_back({r, r, 1.0});
        for (std::size_t k = adjacency.row_ptr()[r]; k < adjacency.row_ptr()[r + 1]; ++k) {
            const std::size_t c = adjacency.col_idx()[k];
            entries.push_back({r, c, -inv_sqrt[r] * adjacency.values()[k] * inv_sqrt[c]});
        }
    }
    return SparseMatrix::from_entries(n, n, std::move(entries));
}

double estimate_lambda_max(const SparseMatrix& laplacian, PowerIteration opts) {
    const std::size_t n = laplacian.rows();
    constexpr double kFallback = 2.0;
    if (n < 2) return kFallback;

    Matrix v(n, 1);
    for (std::size_t i = 0; i < n; ++i) v(i, 0) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
    auto normalize = [](Matrix& x) {
        double norm = 0.0;
        for (double e : x.values()) norm += e * e;
        norm = std::sqrt(norm);
        if (norm == 0.0 || !std::isfinite(norm)) return false;
        for (double& e : x.values()) e /= norm;
        return true;
    };
    if (!normalize(v)) return kFallback;

    double lambda = 0.0;
    for (int it = 0; it < opts.iterations; ++it) {
        Matrix w = kernels::serial::spmm(laplacian, v);
        double rayleigh = 0.0;
        for (std::size_t i = 0; i < n; ++i) rayleigh += v(i, 0) * w(i, 0);
        if (!normalize(w)) return kFallback;
        v = std::move(w);
        if (it > 0 && std::abs(rayleigh - lambda) < opts.tolerance * std::max(1.0, rayleigh)) {
            return rayleigh > 0.0 ? std::min(rayleigh, kFallback) : kFallback;
        }
        lambda = rayleigh;
    }
    return kFallback;
}

Propagator chebyshev_basis(const SparseMatrix& adjacency, int degree, LambdaMax lambda) {
    if (degree < 0) throw ContractError("chebyshev_basis: degree must be >= 0");
    const std::size_t n = adjacency.rows();
    Propagator p;
    p.kind = PropagatorKind::chebyshev;
    p.matrices.push_back(SparseMatrix::identity(n));
    if (degree == 0) return p;

    const SparseMatrix laplacian = symmetric_laplacian(adjacency);
    double lmax = 2.0;
    if (const auto* pi = std::get_if<PowerIteration>(&lambda)) {
        lmax = estimate_lambda_max(laplacian, *pi);
    } else if (std::holds_alternative<ExactEigenvalue>(lambda)) {
        const Matrix dense = laplacian.to_dense();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = dense(r, c);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
        lmax = solver.info() == Eigen::Success ? solver.eigenvalues().maxCoeff() : 2.0;
    } else {
        lmax = std::get<double>(lambda);
    }
    if (!(lmax > 1e-12) || !std::isfinite(lmax)) lmax = 2.0;
    p.lambda_max = lmax;

    // (2 / lmax) * L - I
    const SparseMatrix scaled = scaled_sum(laplacian, 2.0 / lmax, p.matrices[0], -1.0);
    p.matrices.push_back(scaled);
    for (int k = 2; k <= degree; ++k) {
        const SparseMatrix prod = kernels::serial::spgemm(scaled, p.matrices[static_cast<std::size_t>(k - 1)]);
        p.matrices.push_back(scaled_sum(prod, 2.0, p.matrices[static_cast<std::size_t>(k - 2)], -1.0));
    }
    return p;
}

Propagator chebyshev_basis(const LeagueGraph& graph, int degree, LambdaMax lambda) {
    if (graph.nodes.empty()) throw ContractError("chebyshev_basis: empty graph");
    return chebyshev_basis(graph.adjacency, degree, lambda);
}

std::size_t label_source(const LeagueGraph& graph, std::size_t node, int offset) {
    const auto schedule = team_schedules(graph);
    const auto& games = schedule.at(graph.nodes.at(node).team);
    const std::size_t target = graph.nodes[node].team_game_index + static_cast<std::size_t>(offset) + 1;
    return target < games.size() ? games[target] : static_cast<std::size_t>(-1);
}

LeagueGraph assign_labels(LeagueGraph graph, int offset) {
    if (offset < 1) throw ContractError("assign_labels: convolution count must be >= 1");
    graph.labels.assign(graph.nodes.size(), -1);
    graph.label_mask.assign(graph.nodes.size(), false);
    const auto step = static_cast<std::size_t>(offset) + 1;
    for (const auto& [team, games] : team_schedules(graph)) {
        for (std::size_t i = 0; i + step < games.size(); ++i) {
            const std::size_t node = games[i];
            graph.labels[node] = graph.nodes[games[i + step]].won ? 1 : 0;
            graph.label_mask[node] = true;
        }
    }
    return graph;
}

std::set<std::size_t> receptive_field(const LeagueGraph& graph, std::size_t node, int hops) {
    if (node >= graph.nodes.size()) throw ContractError("receptive_field: node out of range");
    std::set<std::size_t> seen{node};
    std::vector<std::size_t> frontier{node};
    const auto& adj = graph.adjacency;
    for (int h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<std::size_t> next;
        for (std::size_t u : frontier)
            for (std::size_t k = adj.row_ptr()[u]; k < adj.row_ptr()[u + 1]; ++k)
                if (seen.insert(adj.col_idx()[k]).second) next.push_back(adj.col_idx()[k]);
        frontier = std::move(next);
    }
    return seen;
}

nlohmann::json to_json(const LeagueGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes)
        nodes.push_back({{"team", n.team},
                         {"game_id", n.game_id},
                         {"team_game_index", n.team_game_index},
                         {"won", n.won}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [u, v] : graph.edges) edges.push_back({u, v});
    return {{"schema_version", kGraphSchemaVersion},
            {"nodes", nodes},
            {"edges", edges},
            {"labels", graph.labels},
            {"label_mask", graph.label_mask}};
}

LeagueGraph graph_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kGraphSchemaVersion)
            throw ConfigError("graph: unsupported schema_version");
        LeagueGraph g;
        for (const auto& n : j.at("nodes"))
            g.nodes.push_back({n.at("team").get<std::string>(), n.at("game_id").get<std::string>(),
                               n.at("team_game_index").get<std::size_t>(), n.at("won").get<bool>()});
        for (const auto& e : j.at("edges")) {
            const auto u = e.at(0).get<std::size_t>();
            const auto v = e.at(1).get<std::size_t>();
            if (u >= g.nodes.size() || v >= g.nodes.size() || u == v)
                throw ConfigError("graph: invalid edge");
            g.edges.emplace_back(std::min(u, v), std::max(u, v));
        }
        std::sort(g.edges.begin(), g.edges.end());
        g.adjacency = adjacency_from_edges(g.nodes.size(), g.edges);
        g.labels = j.at("labels").get<std::vector<int>>();
        g.label_mask = j.at("label_mask").get<std::vector<bool>>();
        if (g.labels.size() != g.nodes.size() || g.label_mask.size() != g.nodes.size())
            throw ConfigError("graph: label arrays do not match node count");
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("graph: ") + e.what());
    }
}

void write_edge_list(std::ostream& out, const LeagueGraph& graph) {
    for (const auto& [u, v] : graph.edges) out << u << ' ' << v << '\n';
}

}  // namespace gcnwp
