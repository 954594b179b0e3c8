#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/league_graph.hpp"
#include "gcnwp/matrix.hpp"

namespace gcnwp {

struct TrainConfig {
    double learning_rate = 0.01;
    int max_epochs = 200;
    int early_stop_patience = 10;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    /// One graph convolution per entry.
    std::vector<std::size_t> hidden_dims = {64};
    PropagatorKind propagator_kind = PropagatorKind::normalized_adjacency;
    int chebyshev_degree = 1;
    /// When true the output layer is a graph convolution too; otherwise it
    /// is a dense layer applied per node.
    bool output_propagates = false;
    std::uint64_t seed = 0;

    void validate() const;
    /// Hops of neighbourhood a model built from this config aggregates; the
    /// label offset used by assign_labels.
    int receptive_hops() const;

    bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
/// Reads the fields present in `j` on top of `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct GcnLayer {
    bool propagates = true;
    std::vector<Matrix> weights;  // one per propagator basis element, or one for a dense layer
    bool operator==(const GcnLayer&) const = default;
};

struct GcnModel {
    TrainConfig config;
    std::vector<std::size_t> layer_dims;  // input, hidden..., 2
    std::vector<GcnLayer> layers;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t parameter_count() const;
    bool operator==(const GcnModel&) const = default;
};

/// Glorot-uniform weights drawn from a generator seeded with config.seed.
GcnModel init_model(const TrainConfig& config, std::size_t input_dim);

/// Propagator matching the model kind (normalized adjacency or Chebyshev).
Propagator make_propagator(const LeagueGraph& graph, const TrainConfig& config);

struct ForwardCache {
    std::vector<Matrix> inputs;          // layer inputs after dropout
    std::vector<Matrix> dropout_scales;  // 0 or 1/(1-p) per entry; empty when no dropout
    std::vector<Matrix> pre_activations;
    Matrix logits;
};

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng);

/// Hidden layers use ReLU; the output is linear logits over {loss, win}.
/// Dropout (inverted scaling) is applied to every layer input when training.
ForwardCache forward(const GcnModel& model, const Matrix& features, const Propagator& propagator,
                     bool training, std::mt19937_64* rng = nullptr);

/// Mean softmax cross-entropy over masked nodes plus
/// weight_decay * 0.5 * sum of squared first-layer weights.
double masked_loss(const Matrix& logits, const std::vector<int>& labels,
                   const std::vector<bool>& mask, double weight_decay, const GcnModel& model);

using Gradients = std::vector<std::vector<Matrix>>;  // [layer][basis]

/// Analytic gradient of masked_loss with respect to every weight matrix.
Gradients backward(const GcnModel& model, const ForwardCache& cache, const Propagator& propagator,
                   const std::vector<int>& labels, const std::vector<bool>& mask,
                   double weight_decay);

/// A graph prepared for training or evaluation.
struct GraphBatch {
    Matrix features;
    Propagator propagator;
    std::vector<int> labels;
    std::vector<bool> mask;
};

GraphBatch make_batch(const LeagueGraph& graph, const TrainConfig& config);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t labeled = 0;
};

/// Loss (without weight decay) and accuracy over masked nodes, no dropout.
Evaluation evaluate(const GcnModel& model, const GraphBatch& batch);

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    int best_epoch = 0;  // 1-based
    int epochs_run = 0;
    std::optional<double> test_accuracy;
};

void write_report_csv(std::ostream& out, const TrainReport& report);

struct TrainResult {
    GcnModel model;  // best-validation snapshot
    TrainReport report;
};

/// Full-batch Adam with validation early stopping.
TrainResult train(GcnModel model, const GraphBatch& train_batch, const GraphBatch& val_batch,
                  const TrainConfig& config);

/// Probability of a win for every node.
std::vector<double> predict(const GcnModel& model, const Matrix& features,
                            const Propagator& propagator);

inline constexpr int kModelSchemaVersion = 1;
nlohmann::json to_json(const GcnModel& model);
GcnModel model_from_json(const nlohmann::json& j);

}  // namespace gcnwp
