#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/ingest.hpp"
#include "gcnwp/matrix.hpp"

namespace gcnwp {

/// A node is one team's side of one game.
struct GraphNode {
    std::string team;
    std::string game_id;
    std::size_t team_game_index = 0;  // position in the team's chronological schedule
    bool won = false;
    bool operator==(const GraphNode&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;  // first < second

/// Team-game graph of one league season.
///
/// Nodes follow the (timestamp, game_id, team) order of the records, which is
/// also the row order of build_feature_matrix. Every node links to its
/// opponent's node for the same game and to its own team's previous game.
struct LeagueGraph {
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;  // sorted, unique
    SparseMatrix adjacency;   // symmetric 0/1, zero diagonal
    Matrix features;          // rows aligned to nodes; empty until attached
    std::vector<int> labels;  // -1 where unlabeled
    std::vector<bool> label_mask;

    std::size_t node_count() const noexcept { return nodes.size(); }
    std::size_t labeled_count() const;
    /// Neighbour lists derived from the edge list.
    std::vector<std::vector<std::size_t>> neighbours() const;
};

/// Builds the graph from one league-season of validated, paired records.
LeagueGraph build_league_graph(const std::vector<TeamGameRecord>& records);

/// Copies the feature rows onto the graph, matching rows by (team, game_id).
void attach_features(LeagueGraph& graph, const FeatureMatrix& features);

enum class PropagatorKind { normalized_adjacency, chebyshev };

std::string_view to_string(PropagatorKind k);
PropagatorKind parse_propagator_kind(std::string_view s);

struct Propagator {
    PropagatorKind kind = PropagatorKind::normalized_adjacency;
    std::vector<SparseMatrix> matrices;
    double lambda_max = 0.0;  // only meaningful for chebyshev
};

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Propagator normalized_adjacency(const LeagueGraph& graph);
Propagator normalized_adjacency(const SparseMatrix& adjacency);

/// How the largest eigenvalue of the symmetric Laplacian is obtained.
struct PowerIteration {
    int iterations = 100;
    double tolerance = 1e-6;
};
struct ExactEigenvalue {};
using LambdaMax = std::variant<PowerIteration, ExactEigenvalue, double>;

/// Chebyshev basis T_0..T_K of the rescaled Laplacian
/// (2 / lambda_max) * (I - D^-1/2 A D^-1/2) - I.
Propagator chebyshev_basis(const LeagueGraph& graph, int degree, LambdaMax lambda = PowerIteration{});
Propagator chebyshev_basis(const SparseMatrix& adjacency, int degree,
                           LambdaMax lambda = PowerIteration{});

/// Symmetric Laplacian I - D^-1/2 A D^-1/2; isolated nodes keep a unit diagonal.
SparseMatrix symmetric_laplacian(const SparseMatrix& adjacency);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration. Returns
/// 2.0 when the iteration does not converge or the matrix is degenerate.
double estimate_lambda_max(const SparseMatrix& laplacian, PowerIteration opts = {});

/// Labels every node with its team's outcome `offset + 1` games later, where
/// `offset` is the number of hops the model aggregates. Nodes without such a
/// game stay unlabeled.
LeagueGraph assign_labels(LeagueGraph graph, int offset);

/// Nodes within `hops` edges of `node`, including the node itself.
std::set<std::size_t> receptive_field(const LeagueGraph& graph, std::size_t node, int hops);

/// Index of the node whose outcome a labeled node carries, or npos.
std::size_t label_source(const LeagueGraph& graph, std::size_t node, int offset);

nlohmann::json to_json(const LeagueGraph& graph);
LeagueGraph graph_from_json(const nlohmann::json& j);
void write_edge_list(std::ostream& out, const LeagueGraph& graph);

inline constexpr int kGraphSchemaVersion = 1;

}  // namespace gcnwp
