#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "gcnwp/error.hpp"
#include "gcnwp/gcn.hpp"
#include "support.hpp"

using namespace gcnwp;

namespace {

/// Random connected-ish graph with features and a random label mask.
struct Fixture {
    LeagueGraph graph;
    std::vector<int> labels;
    std::vector<bool> mask;
};

Fixture random_fixture(std::uint64_t seed, int teams, int games, std::size_t dims) {
    std::mt19937_64 rng(seed);
    Fixture f;
    f.graph = build_league_graph(testing::random_season(rng, teams, games));
    const std::size_t n = f.graph.node_count();
    f.graph.features = testing::random_matrix(rng, n, dims);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        f.labels.push_back(coin(rng) ? 1 : 0);
        f.mask.push_back(i % 3 != 2);
    }
    return f;
}

TrainConfig config_for(PropagatorKind kind, std::vector<std::size_t> hidden, int degree = 1) {
    TrainConfig c;
    c.propagator_kind = kind;
    c.hidden_dims = std::move(hidden);
    c.chebyshev_degree = degree;
    c.dropout = 0.0;
    c.seed = 17;
    return c;
}

double loss_of(const GcnModel& m, const Fixture& f, const Propagator& p, double wd) {
    return masked_loss(forward(m, f.graph.features, p, false).logits, f.labels, f.mask, wd, m);
}

/// Largest relative error between analytic and central-difference gradients.
double gradient_error(GcnModel model, const Fixture& f, const Propagator& p, double wd) {
    const auto cache = forward(model, f.graph.features, p, true);
    const auto grads = backward(model, cache, p, f.labels, f.mask, wd);
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (std::size_t k = 0; k < model.layers[l].weights.size(); ++k) {
            Matrix& w = model.layers[l].weights[k];
            for (std::size_t i = 0; i < w.rows(); ++i) {
                for (std::size_t j = 0; j < w.cols(); ++j) {
                    const double saved = w(i, j);
                    w(i, j) = saved + eps;
                    const double up = loss_of(model, f, p, wd);
                    w(i, j) = saved - eps;
                    const double down = loss_of(model, f, p, wd);
                    w(i, j) = saved;
                    const double numeric = (up - down) / (2 * eps);
                    const double analytic = grads[l][k](i, j);
                    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
                    worst = std::max(worst, std::abs(numeric - analytic) / scale);
                }
            }
        }
    }
    return worst;
}

GcnModel zero_model(GcnModel m) {
    for (auto& layer : m.layers)
        for (auto& w : layer.weights) w = Matrix(w.rows(), w.cols(), 0.0);
    return m;
}

}  // namespace

TEST_CASE("init_model shapes and determinism") {
    SUBCASE("normalized adjacency, one hidden layer") {
        const auto m = init_model(config_for(PropagatorKind::normalized_adjacency, {64}), 30);
        CHECK(m.layer_dims == std::vector<std::size_t>{30, 64, 2});
        REQUIRE(m.layers.size() == 2);
        CHECK(m.layers[0].weights.size() == 1);
        CHECK(m.layers[0].weights[0].rows() == 30);
        CHECK(m.layers[0].weights[0].cols() == 64);
        CHECK(m.layers[1].weights[0].rows() == 64);
        CHECK(m.layers[1].weights[0].cols() == 2);
    }
    SUBCASE("chebyshev K=1 with a propagating output has two matrices per layer") {
        auto c = config_for(PropagatorKind::chebyshev, {64}, 1);
        c.output_propagates = true;
        const auto m = init_model(c, 30);
        std::size_t count = 0;
        for (const auto& l : m.layers) count += l.weights.size();
        CHECK(count == 4);
    }
    SUBCASE("dense output stage keeps a single matrix") {
        const auto m = init_model(config_for(PropagatorKind::chebyshev, {64}, 1), 30);
        CHECK(m.layers[0].weights.size() == 2);
        CHECK_FALSE(m.layers[1].propagates);
        CHECK(m.layers[1].weights.size() == 1);
    }
    SUBCASE("no hidden layers") {
        const auto m = init_model(config_for(PropagatorKind::normalized_adjacency, {}), 5);
        CHECK(m.layer_dims == std::vector<std::size_t>{5, 2});
        CHECK(m.layers.size() == 1);
    }
    SUBCASE("same seed, same weights") {
        const auto c = config_for(PropagatorKind::normalized_adjacency, {8});
        CHECK(init_model(c, 4) == init_model(c, 4));
        auto other = c;
        other.seed = 18;
        CHECK_FALSE(init_model(other, 4) == init_model(c, 4));
    }
    SUBCASE("glorot bound") {
        const auto m = init_model(config_for(PropagatorKind::normalized_adjacency, {16}), 30);
        const double bound = std::sqrt(6.0 / (30 + 16));
        for (double v : m.layers[0].weights[0].values()) CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("receptive hops") {
    CHECK(config_for(PropagatorKind::normalized_adjacency, {64}).receptive_hops() == 1);
    CHECK(config_for(PropagatorKind::normalized_adjacency, {64, 64}).receptive_hops() == 2);
    CHECK(config_for(PropagatorKind::chebyshev, {64}, 2).receptive_hops() == 2);
    auto c = config_for(PropagatorKind::normalized_adjacency, {64});
    c.output_propagates = true;
    CHECK(c.receptive_hops() == 2);
}

TEST_CASE("forward") {
    SUBCASE("zero weights give uniform predictions") {
        const auto f = random_fixture(1, 4, 6, 3);
        const auto c = config_for(PropagatorKind::normalized_adjacency, {4});
        const auto m = zero_model(init_model(c, 3));
        const auto p = make_propagator(f.graph, c);
        const auto cache = forward(m, f.graph.features, p, false);
        for (double v : cache.logits.values()) CHECK(v == 0.0);
        for (double v : predict(m, f.graph.features, p)) CHECK(v == 0.5);
    }
    SUBCASE("identity propagator reduces to a dense layer") {
        std::mt19937_64 rng(2);
        const Matrix x = testing::random_matrix(rng, 5, 3);
        auto c = config_for(PropagatorKind::normalized_adjacency, {});
        c.output_propagates = true;
        const auto m = init_model(c, 3);
        const auto p = normalized_adjacency(SparseMatrix(5));
        const auto logits = forward(m, x, p, false).logits;
        const auto expect = testing::dense_mul(testing::from_matrix(x), testing::from_matrix(m.layers[0].weights[0]));
        CHECK(testing::from_matrix(logits) == expect);
    }
    SUBCASE("four-node hand computation") {
        // Path a-b-c-d. Degrees with self loops: 2, 3, 3, 2.
        LeagueGraph g;
        g.nodes.resize(4);
        g.adjacency = SparseMatrix::from_entries(
            4, 4, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}, {2, 3, 1}, {3, 2, 1}});
        const Matrix x(4, 1, {1.0, 0.0, -1.0, 2.0});
        auto c = config_for(PropagatorKind::normalized_adjacency, {1});
        GcnModel m = init_model(c, 1);
        m.layers[0].weights[0] = Matrix(1, 1, {2.0});
        m.layers[1].weights[0] = Matrix(1, 2, {1.0, -1.0});
        const auto p = normalized_adjacency(g.adjacency);
        const auto logits = forward(m, x, p, false).logits;
        // Row a: x_a/2 + x_b/sqrt(6) = 0.5, times 2 = 1.0.
        // Row b: x_a/sqrt(6) + x_b/3 + x_c/3 = 1/sqrt(6) - 1/3.
        // Row c: x_b/3 + x_c/3 + x_d/sqrt(6) = -1/3 + 2/sqrt(6).
        // Row d: x_c/sqrt(6) + x_d/2 = -1/sqrt(6) + 1.
        const double s6 = std::sqrt(6.0);
        const double h[] = {1.0, 2 * (1 / s6 - 1.0 / 3), 2 * (-1.0 / 3 + 2 / s6), 2 * (1 - 1 / s6)};
        for (std::size_t i = 0; i < 4; ++i) {
            const double relu = std::max(0.0, h[i]);
            CHECK(std::abs(logits(i, 0) - relu) < 1e-10);
            CHECK(std::abs(logits(i, 1) + relu) < 1e-10);
        }
    }
    SUBCASE("matches the dense oracle") {
        for (auto kind : {PropagatorKind::normalized_adjacency, PropagatorKind::chebyshev}) {
            const auto f = random_fixture(4, 5, 9, 3);
            auto c = config_for(kind, {4, 3}, 2);
            const auto m = init_model(c, 3);
            const auto p = make_propagator(f.graph, c);
            const auto oracle = testing::dense_logits(m, f.graph.features, p);
            CHECK(testing::max_abs_diff(testing::from_matrix(forward(m, f.graph.features, p, false).logits),
                                        oracle) < 1e-12);
        }
    }
    SUBCASE("shape mismatch names the problem") {
        const auto f = random_fixture(1, 4, 6, 3);
        const auto c = config_for(PropagatorKind::normalized_adjacency, {4});
        const auto m = init_model(c, 5);
        CHECK_THROWS_AS(forward(m, f.graph.features, make_propagator(f.graph, c), false), ContractError);
    }
}

TEST_CASE("masked loss") {
    const GcnModel none = init_model(config_for(PropagatorKind::normalized_adjacency, {}), 1);
    SUBCASE("uniform logits cost ln 2") {
        const Matrix z(4, 2, 0.0);
        CHECK(masked_loss(z, {0, 1, 0, 1}, {true, true, true, true}, 0.0, none) ==
              doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }
    SUBCASE("confident correct prediction costs almost nothing") {
        const Matrix z(1, 2, {-30.0, 30.0});
        CHECK(masked_loss(z, {1}, {true}, 0.0, none) < 1e-20);
    }
    SUBCASE("matches a per-node oracle") {
        std::mt19937_64 rng(6);
        const Matrix z = testing::random_matrix(rng, 6, 2, 3.0);
        const std::vector<int> y = {1, 0, 0, 1, 1, 0};
        const std::vector<bool> mask = {true, false, true, true, false, true};
        CHECK(masked_loss(z, y, mask, 0.0, none) ==
              doctest::Approx(testing::dense_loss(testing::from_matrix(z), y, mask)).epsilon(1e-14));
    }
    SUBCASE("weight decay covers the first layer only") {
        auto c = config_for(PropagatorKind::normalized_adjacency, {2});
        GcnModel m = init_model(c, 2);
        m.layers[0].weights[0] = Matrix(2, 2, {1.0, 2.0, 0.0, -1.0});
        m.layers[1].weights[0] = Matrix(2, 2, 100.0);
        const Matrix z(1, 2, 0.0);
        CHECK(masked_loss(z, {1}, {true}, 0.1, m) == doctest::Approx(std::log(2.0) + 0.05 * 6.0));
    }
    SUBCASE("empty mask is an error") {
        CHECK_THROWS_AS(masked_loss(Matrix(2, 2), {0, 1}, {false, false}, 0.0, none), ContractError);
    }
}

TEST_CASE("gradients match central differences") {
    SUBCASE("two-layer gcn") {
        const auto f = random_fixture(21, 4, 5, 3);
        const auto c = config_for(PropagatorKind::normalized_adjacency, {4, 3});
        const auto m = init_model(c, 3);
        CHECK(gradient_error(m, f, make_propagator(f.graph, c), 5e-4) < 1e-4);
    }
    SUBCASE("one-layer chebyshev") {
        const auto f = random_fixture(22, 4, 5, 3);
        const auto c = config_for(PropagatorKind::chebyshev, {4}, 1);
        const auto m = init_model(c, 3);
        CHECK(gradient_error(m, f, make_propagator(f.graph, c), 5e-4) < 1e-4);
    }
    SUBCASE("propagating output layer") {
        const auto f = random_fixture(23, 3, 3, 2);
        auto c = config_for(PropagatorKind::chebyshev, {3}, 2);
        c.output_propagates = true;
        const auto m = init_model(c, 2);
        CHECK(gradient_error(m, f, make_propagator(f.graph, c), 1e-2) < 1e-4);
    }
}

TEST_CASE("weight decay gradient is linear in the coefficient") {
    const auto f = random_fixture(30, 4, 5, 3);
    const auto c = config_for(PropagatorKind::normalized_adjacency, {4});
    const auto m = init_model(c, 3);
    const auto p = make_propagator(f.graph, c);
    const auto cache = forward(m, f.graph.features, p, true);
    const auto g0 = backward(m, cache, p, f.labels, f.mask, 0.0);
    const auto g1 = backward(m, cache, p, f.labels, f.mask, 0.01);
    const auto g2 = backward(m, cache, p, f.labels, f.mask, 0.02);
    const auto& w = m.layers[0].weights[0].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d1 = g1[0][0].values()[i] - g0[0][0].values()[i];
        const double d2 = g2[0][0].values()[i] - g0[0][0].values()[i];
        CHECK(d1 == doctest::Approx(0.01 * w[i]).epsilon(1e-9));
        CHECK(d2 == doctest::Approx(2 * d1).epsilon(1e-9));
    }
    CHECK(g1[1][0] == g0[1][0]);
}

TEST_CASE("zero gradient at a minimum") {
    // Zero weights, balanced labels on a symmetric edge: every direction is flat.
    std::vector<TeamGameRecord> recs;
    testing::add_game(recs, "g1", "A", "B", true, testing::day(0));
    auto g = build_league_graph(recs);
    const Matrix x(2, 1, {1.0, 1.0});
    const auto c = config_for(PropagatorKind::normalized_adjacency, {});
    const auto m = zero_model(init_model(c, 1));
    const auto p = make_propagator(g, c);
    const auto grads = backward(m, forward(m, x, p, true), p, {0, 1}, {true, true}, 0.0);
    double norm = 0.0;
    for (const auto& layer : grads)
        for (const auto& w : layer)
            for (double v : w.values()) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("stale cache is rejected") {
    const auto f = random_fixture(31, 4, 5, 3);
    const auto c = config_for(PropagatorKind::normalized_adjacency, {4});
    const auto p = make_propagator(f.graph, c);
    const auto cache = forward(init_model(c, 3), f.graph.features, p, true);
    auto wider = c;
    wider.hidden_dims = {5};
    CHECK_THROWS_AS(backward(init_model(wider, 3), cache, p, f.labels, f.mask, 0.0), ContractError);
}

TEST_CASE("inverted dropout preserves the expected pre-activation") {
    const auto f = random_fixture(40, 4, 6, 3);
    auto c = config_for(PropagatorKind::normalized_adjacency, {4});
    c.dropout = 0.5;
    const auto m = init_model(c, 3);
    const auto p = make_propagator(f.graph, c);
    const Matrix clean = forward(m, f.graph.features, p, false).pre_activations[0];
    Matrix sum(clean.rows(), clean.cols(), 0.0);
    std::mt19937_64 rng(1);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto cache = forward(m, f.graph.features, p, true, &rng);
        for (std::size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += cache.pre_activations[0].values()[i];
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sum.values().size(); ++i) {
        num += std::abs(sum.values()[i] / draws - clean.values()[i]);
        den += std::abs(clean.values()[i]);
    }
    CHECK(num / den < 0.01);
}

TEST_CASE("predictions are permutation equivariant") {
    const auto f = random_fixture(50, 5, 8, 3);
    const auto c = config_for(PropagatorKind::chebyshev, {4}, 1);
    const auto m = init_model(c, 3);
    // Power iteration depends on node order up to its tolerance, so pin lambda.
    const auto base = predict(m, f.graph.features, chebyshev_basis(f.graph, 1, 2.0));

    const std::size_t n = f.graph.node_count();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);  // new node i is old node perm[i]
    std::vector<std::size_t> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = i;
    std::vector<SparseMatrix::Entry> entries;
    for (auto [u, v] : f.graph.edges) {
        entries.push_back({inv[u], inv[v], 1.0});
        entries.push_back({inv[v], inv[u], 1.0});
    }
    const auto adj = SparseMatrix::from_entries(n, n, entries);
    Matrix x(n, 3);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = f.graph.features(perm[i], j);
    const auto permuted = predict(m, x, chebyshev_basis(adj, 1, 2.0));
    for (std::size_t i = 0; i < n; ++i) CHECK(permuted[i] == doctest::Approx(base[perm[i]]).epsilon(1e-12));
}

TEST_CASE("predict") {
    SUBCASE("antisymmetric inputs give complementary probabilities for a linear model") {
        std::mt19937_64 rng(9);
        const Matrix half = testing::random_matrix(rng, 3, 4);
        Matrix x(6, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                x(2 * i, j) = half(i, j);
                x(2 * i + 1, j) = -half(i, j);
            }
        const auto c = config_for(PropagatorKind::normalized_adjacency, {});
        const auto m = init_model(c, 4);
        const auto probs = predict(m, x, normalized_adjacency(SparseMatrix(6)));
        for (std::size_t i = 0; i < 3; ++i) CHECK(probs[2 * i] + probs[2 * i + 1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch") {
        const auto f = random_fixture(1, 4, 6, 3);
        const auto c = config_for(PropagatorKind::normalized_adjacency, {4});
        CHECK_THROWS_AS(predict(init_model(c, 2), f.graph.features, make_propagator(f.graph, c)), ContractError);
    }
}

namespace {

/// Nodes carry a noisy copy of their label in feature 0.
GraphBatch separable_batch(std::uint64_t seed, const TrainConfig& c) {
    std::mt19937_64 rng(seed);
    LeagueGraph g = build_league_graph(testing::random_season(rng, 8, 60));
    g = assign_labels(std::move(g), 1);
    g.features = testing::random_matrix(rng, g.node_count(), 3, 0.1);
    for (std::size_t i = 0; i < g.node_count(); ++i)
        g.features(i, 0) += g.label_mask[i] ? (g.labels[i] == 1 ? 1.0 : -1.0) : 0.0;
    return make_batch(g, c);
}

}  // namespace

TEST_CASE("training") {
    const auto c = config_for(PropagatorKind::normalized_adjacency, {8});
    SUBCASE("separable data reaches high training accuracy") {
        // Degree 0 skips neighbour smoothing, which would blur the planted labels.
        auto dense = config_for(PropagatorKind::chebyshev, {8}, 0);
        const auto tb = separable_batch(1, dense);
        const auto vb = separable_batch(2, dense);
        const auto result = train(init_model(dense, 3), tb, vb, dense);
        CHECK(evaluate(result.model, tb).accuracy >= 0.95);
    }
    SUBCASE("zero learning rate leaves weights untouched") {
        auto frozen = c;
        frozen.learning_rate = 0.0;
        frozen.max_epochs = 5;
        const auto tb = separable_batch(1, frozen);
        const auto m = init_model(frozen, 3);
        CHECK(train(m, tb, tb, frozen).model == m);
    }
    SUBCASE("patience one stops early") {
        // A linear model whose validation set is the training set with flipped
        // labels: every training step makes validation strictly worse.
        auto quick = config_for(PropagatorKind::chebyshev, {}, 0);
        quick.early_stop_patience = 1;
        quick.learning_rate = 0.1;
        const auto tb = separable_batch(1, quick);
        auto vb = tb;
        for (auto& y : vb.labels) y = y < 0 ? y : 1 - y;
        const auto result = train(init_model(quick, 3), tb, vb, quick);
        CHECK(result.report.epochs_run <= 2);
        CHECK(result.report.best_epoch == 1);
    }
    SUBCASE("determinism") {
        auto noisy = c;
        noisy.dropout = 0.5;
        const auto tb = separable_batch(1, noisy);
        const auto vb = separable_batch(2, noisy);
        const auto a = train(init_model(noisy, 3), tb, vb, noisy);
        const auto b = train(init_model(noisy, 3), tb, vb, noisy);
        CHECK(a.model == b.model);
        CHECK(a.report.val_loss == b.report.val_loss);
        std::ostringstream sa, sb;
        write_report_csv(sa, a.report);
        write_report_csv(sb, b.report);
        CHECK(sa.str() == sb.str());
        CHECK(sa.str().rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
    }
    SUBCASE("divergence reports the epoch") {
        auto wild = c;
        wild.learning_rate = std::numeric_limits<double>::max();
        const auto tb = separable_batch(1, wild);
        try {
            train(init_model(wild, 3), tb, tb, wild);
            FAIL("expected TrainingError");
        } catch (const TrainingError& e) {
            CHECK(e.epoch() >= 1);
        }
    }
}

TEST_CASE("model serialization round trips exactly") {
    auto c = config_for(PropagatorKind::chebyshev, {5, 4}, 2);
    c.dropout = 0.25;
    const auto m = init_model(c, 7);
    const auto j = to_json(m);
    CHECK(j.at("schema_version") == kModelSchemaVersion);
    CHECK(model_from_json(nlohmann::json::parse(j.dump())) == m);
    auto bad = j;
    bad["schema_version"] = 99;
    CHECK_THROWS_AS(model_from_json(bad), ConfigError);
    CHECK(train_config_from_json(to_json(c)) == c);
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.hidden_dims = {0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
