#pragma once

// Fixtures and independent reference implementations shared by the tests.
// Oracles here use plain dense loops and never call the code they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gcnwp/gcn.hpp"
#include "gcnwp/ingest.hpp"
#include "gcnwp/league_graph.hpp"
#include "gcnwp/matrix.hpp"

namespace testing {

using gcnwp::Matrix;
using gcnwp::TeamGameRecord;
using Dense = std::vector<std::vector<double>>;

inline gcnwp::Timestamp day(int n, int minute = 0) {
    using namespace std::chrono;
    return sys_days{year{2020} / January / 1} + days{n} + minutes{minute};
}

/// Appends both sides of one game; `a_won` decides the result.
inline void add_game(std::vector<TeamGameRecord>& out, const std::string& id, const std::string& a,
                     const std::string& b, bool a_won, gcnwp::Timestamp ts,
                     const std::string& league = "LPL", int season = 2020,
                     std::map<std::string, double> fa = {}, std::map<std::string, double> fb = {}) {
    TeamGameRecord ra;
    ra.game_id = id;
    ra.league = league;
    ra.season = season;
    ra.team = a;
    ra.opponent = b;
    ra.timestamp = ts;
    ra.won = a_won;
    ra.kills = a_won ? 15 : 8;
    ra.opponent_kills = a_won ? 8 : 15;
    ra.features = std::move(fa);
    TeamGameRecord rb = ra;
    rb.team = b;
    rb.opponent = a;
    rb.won = !a_won;
    std::swap(rb.kills, rb.opponent_kills);
    rb.features = std::move(fb);
    out.push_back(std::move(ra));
    out.push_back(std::move(rb));
}

/// Random schedule: `games` games among `teams` teams, random pairings and
/// occasionally equal timestamps to exercise tie-breaking.
inline std::vector<TeamGameRecord> random_season(std::mt19937_64& rng, int teams, int games) {
    std::vector<TeamGameRecord> out;
    std::uniform_int_distribution<int> pick(0, teams - 1);
    std::bernoulli_distribution coin(0.5);
    int clock = 0;
    for (int g = 0; g < games; ++g) {
        int a = pick(rng), b = pick(rng);
        while (b == a) b = pick(rng);
        if (coin(rng)) ++clock;
        char id[16];
        std::snprintf(id, sizeof id, "g%03d", g);
        add_game(out, id, "T" + std::to_string(a), "T" + std::to_string(b), coin(rng), day(0, clock));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

/// Graph as (team, game_id) keyed edges, independent of node numbering.
using NodeKey = std::pair<std::string, std::string>;
using KeyEdge = std::pair<NodeKey, NodeKey>;

inline KeyEdge key_edge(NodeKey a, NodeKey b) {
    return a < b ? KeyEdge{a, b} : KeyEdge{b, a};
}

/// Brute-force builder: scans all record pairs. Two records are linked when
/// they are the two sides of one game, or when one is the same team's latest
/// game strictly before the other in (timestamp, game_id) order.
inline std::pair<std::set<NodeKey>, std::set<KeyEdge>> brute_force_graph(
    const std::vector<TeamGameRecord>& recs) {
    std::set<NodeKey> nodes;
    std::set<KeyEdge> edges;
    auto before = [](const TeamGameRecord& x, const TeamGameRecord& y) {
        return std::tie(x.timestamp, x.game_id) < std::tie(y.timestamp, y.game_id);
    };
    for (const auto& r : recs) nodes.insert({r.team, r.game_id});
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (std::size_t j = 0; j < recs.size(); ++j) {
            if (i == j) continue;
            const auto& x = recs[i];
            const auto& y = recs[j];
            if (x.game_id == y.game_id && x.team != y.team)
                edges.insert(key_edge({x.team, x.game_id}, {y.team, y.game_id}));
            if (x.team == y.team && before(x, y)) {
                bool immediate = true;
                for (const auto& z : recs)
                    if (z.team == x.team && before(x, z) && before(z, y)) immediate = false;
                if (immediate) edges.insert(key_edge({x.team, x.game_id}, {y.team, y.game_id}));
            }
        }
    }
    return {nodes, edges};
}

inline Dense dense_adjacency(std::size_t n, const std::vector<gcnwp::Edge>& edges) {
    Dense a(n, std::vector<double>(n, 0.0));
    for (auto [u, v] : edges) a[u][v] = a[v][u] = 1.0;
    return a;
}

/// D^-1/2 (A + I) D^-1/2 computed entry by entry.
inline Dense dense_normalized(const Dense& a) {
    const std::size_t n = a.size();
    std::vector<double> deg(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
    Dense out(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i][j] = (a[i][j] + (i == j ? 1.0 : 0.0)) / std::sqrt(deg[i] * deg[j]);
    return out;
}

inline Dense to_dense(const gcnwp::SparseMatrix& s) {
    const Matrix m = s.to_dense();
    Dense out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

inline Dense dense_mul(const Dense& a, const Dense& b) {
    Dense out(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

inline Dense from_matrix(const Matrix& m) {
    Dense out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
    return worst;
}

/// Logits of a model computed with dense loops and no dropout.
inline Dense dense_logits(const gcnwp::GcnModel& model, const Matrix& x, const gcnwp::Propagator& p) {
    std::vector<Dense> basis;
    for (const auto& m : p.matrices) basis.push_back(to_dense(m));
    Dense h = from_matrix(x);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        Dense z(h.size(), std::vector<double>(layer.weights.front().cols(), 0.0));
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
            Dense term = dense_mul(h, from_matrix(layer.weights[k]));
            if (layer.propagates) term = dense_mul(basis[k], term);
            for (std::size_t i = 0; i < z.size(); ++i)
                for (std::size_t j = 0; j < z[i].size(); ++j) z[i][j] += term[i][j];
        }
        if (l + 1 < model.layers.size())
            for (auto& row : z)
                for (auto& v : row) v = std::max(0.0, v);
        h = std::move(z);
    }
    return h;
}

/// Masked mean softmax cross-entropy, one node at a time.
inline double dense_loss(const Dense& logits, const std::vector<int>& labels,
                         const std::vector<bool>& mask) {
    double total = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!mask[i]) continue;
        const double z0 = logits[i][0], z1 = logits[i][1];
        const double m = std::max(z0, z1);
        const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
        total += lse - (labels[i] == 1 ? z1 : z0);
        ++count;
    }
    return total / count;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

}  // namespace testing
