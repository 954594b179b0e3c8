#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/forest.hpp"
#include "gcnwp/gcn.hpp"
#include "gcnwp/ingest.hpp"
#include "gcnwp/scope.hpp"

namespace gcnwp {

/// Fixed league roles for one season.
struct SplitPlan {
    std::string train_league = "LPL";
    std::string val_league = "LCK";
    std::string test_league = "LCS";
    int season = 2020;

    void validate() const;
};

/// Test-league labels behind a counter: every score() call is a read.
class SealedLabels {
public:
    SealedLabels() = default;
    SealedLabels(std::vector<int> labels, std::vector<bool> mask)
        : labels_(std::move(labels)), mask_(std::move(mask)) {}

    struct Score {
        double accuracy = 0.0;
        double majority_rate = 0.0;  // accuracy of always predicting the commoner class
        std::size_t labeled = 0;
    };

    /// Accuracy of win probabilities against the sealed labels (p > 0.5 is a win).
    Score score(const std::vector<double>& win_probability) const;
    std::size_t reads() const noexcept { return reads_; }

private:
    std::vector<int> labels_;
    std::vector<bool> mask_;
    mutable std::size_t reads_ = 0;
};

enum class ModelFamily { gcn, random_forest, scope };

std::string_view to_string(ModelFamily f);

struct ModelSpec {
    std::string name;
    ModelFamily family = ModelFamily::gcn;
    FeatureMode mode = FeatureMode::delta;
    TrainConfig gcn;
    int lookback = 5;
    ForestConfig forest;
    ScopeGrid scope_grid = ScopeGrid::standard();
};

nlohmann::json to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const nlohmann::json& j, const TrainConfig& gcn_defaults);

/// The six rows of the published comparison: three GCN variants, random
/// forest with 5-game lookback, SCOPE, and the 1-layer Chebyshev GCN on delta.
std::vector<ModelSpec> standard_comparison(const TrainConfig& gcn_defaults = {});

struct ReportRow {
    std::string model;
    ModelFamily family = ModelFamily::gcn;
    std::string mode;  // raw, delta, or - for SCOPE
    std::string parameters;  // compact JSON
    double accuracy = 0.0;  // mean over seeds
    double accuracy_std = 0.0;
    std::size_t n_seeds = 0;
    double validation_accuracy = 0.0;
    double majority_baseline = 0.0;
    std::size_t test_label_reads = 0;
    std::string status = "ok";
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    /// Index of the best row by test accuracy among completed rows; for a
    /// grid search the selected cell.
    std::size_t best_row = 0;
};

void write_report_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::json to_json(const ExperimentReport& report);

/// Train / validation graphs with leakage-safe labels and the unlabeled test
/// graph, all standardized with training-league statistics.
struct PreparedSplit {
    GraphBatch train;
    GraphBatch validation;
    GraphBatch test;  // labels stripped
    SealedLabels test_labels;
    ColumnStats stats;
    std::vector<GraphNode> test_nodes;
};

PreparedSplit prepare_split(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                            const FeatureSpec& spec, const TrainConfig& config);

struct CrossLeagueRun {
    TrainResult trained;
    SealedLabels::Score test;
    ReportRow row;
};

/// Trains on the training league, early-stops on the validation league and
/// scores the test league once.
CrossLeagueRun train_cross_league(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                                  const TrainConfig& config, const FeatureSpec& spec);

ReportRow run_cross_league(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                           const TrainConfig& config, const FeatureSpec& spec);

/// Lattice of GCN cells: hidden layer widths x dropout x model kind x feature mode.
struct GcnGrid {
    std::vector<std::vector<std::size_t>> hidden;
    std::vector<double> dropout;
    std::vector<PropagatorKind> model;
    std::vector<FeatureMode> mode;

    /// 1- and 2-layer widths from {32, 64, 128}, dropout {0.1, 0.25, 0.5},
    /// both model kinds, both datasets: 144 cells.
    static GcnGrid standard();
    std::size_t size() const;
    /// Cell `index` applied on top of `base` (hidden varies slowest).
    std::pair<TrainConfig, FeatureMode> at(std::size_t index, const TrainConfig& base) const;
};

nlohmann::json to_json(const GcnGrid& g);
GcnGrid gcn_grid_from_json(const nlohmann::json& j);

/// Evaluates every cell on the validation league and reports the test
/// accuracy of the selected cell only. Row i of the report is cell i.
ExperimentReport grid_search_gcn(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                                 const GcnGrid& grid, const TrainConfig& base,
                                 const FeatureSpec& spec);

struct CompareOptions {
    std::vector<ModelSpec> models = standard_comparison();
    std::vector<std::uint64_t> seeds = {0};
};

/// One row per requested model. SCOPE uses the test league's three seasons
/// ending at plan.season and is skipped when any is missing.
ExperimentReport compare_all(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                             const CompareOptions& options, const FeatureSpec& spec);

}  // namespace gcnwp
