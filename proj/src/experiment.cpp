#include "gcnwp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "gcnwp/error.hpp"
#include "gcnwp/league_graph.hpp"

namespace gcnwp {

namespace {

std::vector<TeamGameRecord> league_records(const std::vector<TeamGameRecord>& records,
                                           const std::string& league, int season) {
    auto out = filter_regular_season(records, league, season);
    if (out.empty())
        throw DataError("league " + league + " has no regular-season games in " +
                        std::to_string(season));
    return out;
}

FeatureSpec with_mode(FeatureSpec spec, FeatureMode mode) {
    spec.mode = mode;
    return spec;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

std::string compact(const nlohmann::json& j) { return j.dump(); }

nlohmann::json gcn_parameters(const TrainConfig& c) {
    return {{"model", to_string(c.propagator_kind)},
            {"hidden_dims", c.hidden_dims},
            {"dropout", c.dropout},
            {"chebyshev_degree", c.chebyshev_degree},
            {"label_offset", std::max(1, c.receptive_hops())}};
}

LeagueGraph labeled_graph(const std::vector<TeamGameRecord>& records, const FeatureMatrix& fm,
                          int offset) {
    LeagueGraph g = build_league_graph(records);
    attach_features(g, fm);
    return assign_labels(std::move(g), offset);
}

}  // namespace

void SplitPlan::validate() const {
    const std::set<std::string> distinct{train_league, val_league, test_league};
    if (distinct.size() != 3)
        throw ConfigError("split plan: train, validation and test leagues must be distinct");
    for (const auto& l : distinct)
        if (l.empty()) throw ConfigError("split plan: empty league code");
}

SealedLabels::Score SealedLabels::score(const std::vector<double>& win_probability) const {
    ++reads_;
    if (win_probability.size() != labels_.size())
        throw ContractError("SealedLabels: prediction count does not match node count");
    Score s;
    std::size_t correct = 0, wins = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!mask_[i]) continue;
        ++s.labeled;
        if (labels_[i] == 1) ++wins;
        if ((win_probability[i] > 0.5 ? 1 : 0) == labels_[i]) ++correct;
    }
    if (s.labeled == 0) throw ContractError("no labeled nodes");
    const double n = static_cast<double>(s.labeled);
    s.accuracy = static_cast<double>(correct) / n;
    s.majority_rate = static_cast<double>(std::max(wins, s.labeled - wins)) / n;
    return s;
}

std::string_view to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::gcn: return "gcn";
        case ModelFamily::random_forest: return "random_forest";
        case ModelFamily::scope: return "scope";
    }
    return "gcn";
}

nlohmann::json to_json(const ModelSpec& m) {
    nlohmann::json j{{"name", m.name}, {"family", to_string(m.family)}, {"mode", to_string(m.mode)}};
    switch (m.family) {
        case ModelFamily::gcn: j["train"] = to_json(m.gcn); break;
        case ModelFamily::random_forest:
            j["lookback"] = m.lookback;
            j["n_trees"] = m.forest.n_trees;
            j["max_depth"] = m.forest.max_depth;
            j["min_leaf"] = m.forest.min_leaf;
            break;
        case ModelFamily::scope: j["scope_grid"] = to_json(m.scope_grid); break;
    }
    return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j, const TrainConfig& gcn_defaults) {
    ModelSpec m;
    try {
        m.name = j.at("name").get<std::string>();
        const auto family = j.value("family", std::string("gcn"));
        if (family == "gcn") {
            m.family = ModelFamily::gcn;
        } else if (family == "random_forest") {
            m.family = ModelFamily::random_forest;
        } else if (family == "scope") {
            m.family = ModelFamily::scope;
        } else {
            throw ConfigError("model '" + m.name + "': unknown family '" + family + "'");
        }
        if (j.contains("mode")) m.mode = parse_mode(j.at("mode").get<std::string>());
        m.gcn = train_config_from_json(j.contains("train") ? j.at("train") : j, gcn_defaults);
        m.lookback = j.value("lookback", m.lookback);
        m.forest.n_trees = j.value("n_trees", m.forest.n_trees);
        m.forest.max_depth = j.value("max_depth", m.forest.max_depth);
        m.forest.min_leaf = j.value("min_leaf", m.forest.min_leaf);
        m.forest.validate();
        if (j.contains("scope_grid")) m.scope_grid = scope_grid_from_json(j.at("scope_grid"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model spec: ") + e.what());
    }
    return m;
}

std::vector<ModelSpec> standard_comparison(const TrainConfig& gcn_defaults) {
    auto gcn_row = [&](std::string name, PropagatorKind kind, std::size_t layers, FeatureMode mode) {
        ModelSpec m;
        m.name = std::move(name);
        m.family = ModelFamily::gcn;
        m.mode = mode;
        m.gcn = gcn_defaults;
        m.gcn.propagator_kind = kind;
        m.gcn.chebyshev_degree = 1;
        const std::size_t width = gcn_defaults.hidden_dims.empty() ? 64 : gcn_defaults.hidden_dims.front();
        m.gcn.hidden_dims.assign(layers, width);
        return m;
    };
    using K = PropagatorKind;
    std::vector<ModelSpec> models;
    models.push_back(gcn_row("GCN-cheby (1 layer) + raw", K::chebyshev, 1, FeatureMode::raw));
    models.push_back(gcn_row("GCN (1 layer) + delta", K::normalized_adjacency, 1, FeatureMode::delta));
    models.push_back(gcn_row("GCN-cheby (2 layer) + delta", K::chebyshev, 2, FeatureMode::delta));
    ModelSpec rf;
    rf.name = "Random Forest (lookback=5) + delta";
    rf.family = ModelFamily::random_forest;
    rf.mode = FeatureMode::delta;
    rf.lookback = 5;
    models.push_back(rf);
    ModelSpec scope;
    scope.name = "SCOPE (Elo)";
    scope.family = ModelFamily::scope;
    models.push_back(scope);
    models.push_back(gcn_row("GCN-cheby (1 layer) + delta", K::chebyshev, 1, FeatureMode::delta));
    return models;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "model,family,mode,parameters,accuracy,accuracy_std,n_seeds,validation_accuracy,"
           "majority_baseline,status\n";
    for (const auto& r : report.rows)
        out << csv::escape(r.model) << ',' << to_string(r.family) << ',' << r.mode << ','
            << csv::escape(r.parameters) << ',' << csv::format_double(r.accuracy) << ','
            << csv::format_double(r.accuracy_std) << ',' << r.n_seeds << ','
            << csv::format_double(r.validation_accuracy) << ','
            << csv::format_double(r.majority_baseline) << ',' << csv::escape(r.status) << '\n';
}

nlohmann::json to_json(const ExperimentReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"model", r.model},
                        {"family", to_string(r.family)},
                        {"mode", r.mode},
                        {"parameters", nlohmann::json::parse(r.parameters.empty() ? "{}" : r.parameters)},
                        {"accuracy", r.accuracy},
                        {"accuracy_std", r.accuracy_std},
                        {"n_seeds", r.n_seeds},
                        {"validation_accuracy", r.validation_accuracy},
                        {"majority_baseline", r.majority_baseline},
                        {"status", r.status}});
    return {{"rows", rows}, {"best_row", report.best_row}};
}

PreparedSplit prepare_split(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                            const FeatureSpec& spec, const TrainConfig& config) {
    plan.validate();
    config.validate();
    const auto train_records = league_records(records, plan.train_league, plan.season);
    const auto val_records = league_records(records, plan.val_league, plan.season);
    const auto test_records = league_records(records, plan.test_league, plan.season);

    const FeatureMatrix train_raw = build_feature_matrix(train_records, spec);
    const FeatureMatrix train_fm = standardize(train_raw);
    const ColumnStats stats = *train_fm.stats;
    const FeatureMatrix val_fm =
        standardize(build_feature_matrix(val_records, spec, &train_raw.impute_means), stats);
    const FeatureMatrix test_fm =
        standardize(build_feature_matrix(test_records, spec, &train_raw.impute_means), stats);

    const int offset = std::max(1, config.receptive_hops());
    const LeagueGraph train_g = labeled_graph(train_records, train_fm, offset);
    const LeagueGraph val_g = labeled_graph(val_records, val_fm, offset);
    LeagueGraph test_g = labeled_graph(test_records, test_fm, offset);

    PreparedSplit split;
    split.train = make_batch(train_g, config);
    split.validation = make_batch(val_g, config);
    split.test_labels = SealedLabels(std::move(test_g.labels), std::move(test_g.label_mask));
    test_g.labels.assign(test_g.nodes.size(), -1);
    test_g.label_mask.assign(test_g.nodes.size(), false);
    split.test = make_batch(test_g, config);
    split.stats = stats;
    split.test_nodes = test_g.nodes;
    return split;
}

CrossLeagueRun train_cross_league(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                                  const TrainConfig& config, const FeatureSpec& spec) {
    const PreparedSplit split = prepare_split(records, plan, spec, config);
    CrossLeagueRun run;
    run.trained = train(init_model(config, split.train.features.cols()), split.train,
                        split.validation, config);
    const auto probs = predict(run.trained.model, split.test.features, split.test.propagator);
    run.test = split.test_labels.score(probs);
    run.trained.report.test_accuracy = run.test.accuracy;

    auto& row = run.row;
    row.model = std::string(to_string(config.propagator_kind)) + " (" +
                std::to_string(config.hidden_dims.size()) + " layer) + " +
                std::string(to_string(spec.mode));
    row.family = ModelFamily::gcn;
    row.mode = std::string(to_string(spec.mode));
    row.parameters = compact(gcn_parameters(config));
    row.accuracy = run.test.accuracy;
    row.n_seeds = 1;
    const auto best = static_cast<std::size_t>(run.trained.report.best_epoch - 1);
    row.validation_accuracy = run.trained.report.val_accuracy.at(best);
    row.majority_baseline = run.test.majority_rate;
    row.test_label_reads = split.test_labels.reads();
    return run;
}

ReportRow run_cross_league(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                           const TrainConfig& config, const FeatureSpec& spec) {
    return train_cross_league(records, plan, config, spec).row;
}

GcnGrid GcnGrid::standard() {
    GcnGrid g;
    const std::size_t widths[] = {32, 64, 128};
    for (auto w : widths) g.hidden.push_back({w});
    for (auto w1 : widths)
        for (auto w2 : widths) g.hidden.push_back({w1, w2});
    g.dropout = {0.1, 0.25, 0.5};
    g.model = {PropagatorKind::normalized_adjacency, PropagatorKind::chebyshev};
    g.mode = {FeatureMode::raw, FeatureMode::delta};
    return g;
}

std::size_t GcnGrid::size() const { return hidden.size() * dropout.size() * model.size() * mode.size(); }

std::pair<TrainConfig, FeatureMode> GcnGrid::at(std::size_t index, const TrainConfig& base) const {
    if (index >= size()) throw ContractError("GcnGrid::at: index out of range");
    TrainConfig c = base;
    const FeatureMode m = mode[index % mode.size()];
    index /= mode.size();
    c.propagator_kind = model[index % model.size()];
    index /= model.size();
    c.dropout = dropout[index % dropout.size()];
    index /= dropout.size();
    c.hidden_dims = hidden[index];
    return {c, m};
}

nlohmann::json to_json(const GcnGrid& g) {
    std::vector<std::string> model, mode;
    for (auto k : g.model) model.emplace_back(to_string(k));
    for (auto m : g.mode) mode.emplace_back(to_string(m));
    return {{"hidden", g.hidden}, {"dropout", g.dropout}, {"model", model}, {"mode", mode}};
}

GcnGrid gcn_grid_from_json(const nlohmann::json& j) {
    GcnGrid g = GcnGrid::standard();
    try {
        if (j.contains("hidden")) g.hidden = j.at("hidden").get<std::vector<std::vector<std::size_t>>>();
        if (j.contains("dropout")) g.dropout = j.at("dropout").get<std::vector<double>>();
        if (j.contains("model")) {
            g.model.clear();
            for (const auto& m : j.at("model")) g.model.push_back(parse_propagator_kind(m.get<std::string>()));
        }
        if (j.contains("mode")) {
            g.mode.clear();
            for (const auto& m : j.at("mode")) g.mode.push_back(parse_mode(m.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("gcn grid: ") + e.what());
    }
    if (g.size() == 0) throw ConfigError("gcn grid: every axis needs at least one value");
    return g;
}

ExperimentReport grid_search_gcn(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                                 const GcnGrid& grid, const TrainConfig& base,
                                 const FeatureSpec& spec) {
    plan.validate();
    const std::size_t n = grid.size();
    if (n == 0) throw ContractError("grid_search_gcn: empty grid");

    struct Cell {
        TrainConfig config;
        FeatureMode mode = FeatureMode::delta;
        TrainResult trained;
        double val_acc = 0.0;
        double val_loss = 0.0;
        std::string error;
    };
    std::vector<Cell> cells(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        auto& cell = cells[static_cast<std::size_t>(i)];
        std::tie(cell.config, cell.mode) = grid.at(static_cast<std::size_t>(i), base);
        try {
            const auto split = prepare_split(records, plan, with_mode(spec, cell.mode), cell.config);
            cell.trained = train(init_model(cell.config, split.train.features.cols()), split.train,
                                 split.validation, cell.config);
            const auto best = static_cast<std::size_t>(cell.trained.report.best_epoch - 1);
            cell.val_acc = cell.trained.report.val_accuracy.at(best);
            cell.val_loss = cell.trained.report.val_loss.at(best);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    }
    for (const auto& c : cells)
        if (!c.error.empty()) throw Error("grid_search_gcn: " + c.error);

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (cells[i].val_acc > cells[best].val_acc ||
            (cells[i].val_acc == cells[best].val_acc && cells[i].val_loss < cells[best].val_loss))
            best = i;

    ExperimentReport report;
    report.best_row = best;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = cells[i];
        ReportRow row;
        row.model = std::string(to_string(c.config.propagator_kind)) + " (" +
                    std::to_string(c.config.hidden_dims.size()) + " layer) + " +
                    std::string(to_string(c.mode));
        row.family = ModelFamily::gcn;
        row.mode = std::string(to_string(c.mode));
        row.parameters = compact(gcn_parameters(c.config));
        row.validation_accuracy = c.val_acc;
        row.n_seeds = 1;
        row.status = i == best ? "selected" : "validation-only";
        report.rows.push_back(std::move(row));
    }

    // Only the selected cell ever sees the test league.
    const auto& winner = cells[best];
    const auto split = prepare_split(records, plan, with_mode(spec, winner.mode), winner.config);
    const auto score = split.test_labels.score(
        predict(winner.trained.model, split.test.features, split.test.propagator));
    auto& row = report.rows[best];
    row.accuracy = score.accuracy;
    row.majority_baseline = score.majority_rate;
    row.test_label_reads = split.test_labels.reads();
    return report;
}

ExperimentReport compare_all(const std::vector<TeamGameRecord>& records, const SplitPlan& plan,
                             const CompareOptions& options, const FeatureSpec& spec) {
    plan.validate();
    if (options.seeds.empty()) throw ConfigError("compare: at least one seed is required");
    ExperimentReport report;

    for (const auto& model : options.models) {
        ReportRow row;
        row.model = model.name;
        row.family = model.family;
        row.mode = model.family == ModelFamily::scope ? "-" : std::string(to_string(model.mode));
        std::vector<double> accs, vals, majority;

        switch (model.family) {
            case ModelFamily::gcn: {
                row.parameters = compact(gcn_parameters(model.gcn));
                for (auto seed : options.seeds) {
                    TrainConfig c = model.gcn;
                    c.seed = seed;
                    const auto r = run_cross_league(records, plan, c, with_mode(spec, model.mode));
                    accs.push_back(r.accuracy);
                    vals.push_back(r.validation_accuracy);
                    majority.push_back(r.majority_baseline);
                    row.test_label_reads += r.test_label_reads;
                }
                break;
            }
            case ModelFamily::random_forest: {
                row.parameters = compact({{"lookback", model.lookback},
                                          {"n_trees", model.forest.n_trees},
                                          {"max_depth", model.forest.max_depth},
                                          {"min_leaf", model.forest.min_leaf}});
                const auto fspec = with_mode(spec, model.mode);
                const auto train_rows = lookback_dataset(
                    league_records(records, plan.train_league, plan.season), fspec, model.lookback);
                const auto val_rows = lookback_dataset(
                    league_records(records, plan.val_league, plan.season), fspec, model.lookback);
                const auto test_rows = lookback_dataset(
                    league_records(records, plan.test_league, plan.season), fspec, model.lookback);
                if (train_rows.labels.size() < 2 || val_rows.labels.empty() || test_rows.labels.empty())
                    throw DataError("random forest: not enough games for lookback " +
                                    std::to_string(model.lookback));
                for (auto seed : options.seeds) {
                    ForestConfig fc = model.forest;
                    fc.seed = seed;
                    const Forest forest = forest_train(train_rows.rows, train_rows.labels, fc);
                    vals.push_back(forest_accuracy(forest, val_rows.rows, val_rows.labels));
                    const SealedLabels sealed(test_rows.labels,
                                              std::vector<bool>(test_rows.labels.size(), true));
                    std::vector<double> probs;
                    for (std::size_t i = 0; i < test_rows.rows.rows(); ++i)
                        probs.push_back(forest_predict(forest, test_rows.rows.row(i)));
                    const auto score = sealed.score(probs);
                    accs.push_back(score.accuracy);
                    majority.push_back(score.majority_rate);
                    row.test_label_reads += sealed.reads();
                }
                break;
            }
            case ModelFamily::scope: {
                ScopeSeasons seasons;
                const auto pick = [&](int season) {
                    return scope_games(filter_regular_season(records, plan.test_league, season));
                };
                seasons.init = pick(plan.season - 2);
                seasons.validation = pick(plan.season - 1);
                seasons.test = pick(plan.season);
                if (seasons.init.empty() || seasons.validation.empty() || seasons.test.empty()) {
                    row.status = "skipped: SCOPE needs seasons " + std::to_string(plan.season - 2) +
                                 "-" + std::to_string(plan.season) + " for " + plan.test_league;
                    break;
                }
                const auto search = scope_grid_search(seasons, model.scope_grid);
                const auto ev = scope_test(seasons, search.best);
                row.parameters = compact(to_json(search.best));
                accs.push_back(ev.accuracy);
                vals.push_back(search.best_accuracy);
                std::size_t first_side_wins = 0;
                for (const auto& g : seasons.test) first_side_wins += g.team_won ? 1 : 0;
                const std::size_t total = seasons.test.size();
                majority.push_back(static_cast<double>(std::max(first_side_wins, total - first_side_wins)) /
                                   static_cast<double>(total));
                row.test_label_reads = 1;
                break;
            }
        }
        if (!accs.empty()) {
            std::tie(row.accuracy, row.accuracy_std) = mean_std(accs);
            row.validation_accuracy = mean_std(vals).first;
            row.majority_baseline = mean_std(majority).first;
            row.n_seeds = accs.size();
        }
        report.rows.push_back(std::move(row));
    }

    double best_acc = -1.0;
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        if (report.rows[i].status == "ok" && report.rows[i].accuracy > best_acc) {
            best_acc = report.rows[i].accuracy;
            report.best_row = i;
        }
    return report;
}

}  // namespace gcnwp
