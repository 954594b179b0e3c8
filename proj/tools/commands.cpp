#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gcnwp/error.hpp"
#include "gcnwp/experiment.hpp"
#include "gcnwp/forest.hpp"
#include "gcnwp/gcn.hpp"
#include "gcnwp/ingest.hpp"
#include "gcnwp/league_graph.hpp"
#include "gcnwp/scope.hpp"
#include "gcnwp/synth.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace gcnwp::cli {

namespace {

nlohmann::json read_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

std::string stringify(const std::function<void(std::ostream&)>& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

/// Everything a subcommand needs, resolved with flag > file > default precedence.
struct Context {
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json plan_json = nlohmann::json::object();
    FeatureSpec spec = FeatureSpec::default_spec();
    TrainConfig train;
    SplitPlan plan;
    std::vector<std::uint64_t> seeds = {0};
    fs::path out_dir = ".";
    RunManifest manifest;
};

Context resolve(const Options& o) {
    Context ctx;
    ctx.config = read_json(o.config);
    ctx.plan_json = read_json(o.plan);

    if (ctx.config.contains("features")) ctx.spec = feature_spec_from_json(ctx.config.at("features"));
    if (ctx.config.contains("mode")) ctx.spec.mode = parse_mode(ctx.config.at("mode").get<std::string>());
    if (o.mode) ctx.spec.mode = parse_mode(*o.mode);

    for (const auto* src : {&ctx.config, &ctx.plan_json})
        if (src->contains("train")) ctx.train = train_config_from_json(src->at("train"), ctx.train);
    if (o.model) ctx.train.propagator_kind = parse_propagator_kind(*o.model);
    if (o.degree) ctx.train.chebyshev_degree = *o.degree;
    if (o.layers) {
        if (*o.layers < 1) throw ConfigError("--layers must be >= 1");
        const std::size_t width = ctx.train.hidden_dims.empty() ? 64 : ctx.train.hidden_dims.front();
        ctx.train.hidden_dims.assign(static_cast<std::size_t>(*o.layers), width);
    }

    try {
        const auto& p = ctx.plan_json;
        ctx.plan.train_league = p.value("train_league", ctx.plan.train_league);
        ctx.plan.val_league = p.value("val_league", ctx.plan.val_league);
        ctx.plan.test_league = p.value("test_league", ctx.plan.test_league);
        ctx.plan.season = p.value("season", ctx.plan.season);
        if (p.contains("seeds")) ctx.seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }
    if (o.season) ctx.plan.season = *o.season;
    if (o.seed) {
        ctx.train.seed = *o.seed;
        ctx.seeds = {*o.seed};
    } else if (!ctx.seeds.empty()) {
        ctx.train.seed = ctx.seeds.front();
    }
    ctx.train.validate();

    if (!o.out.empty()) ctx.out_dir = o.out;
    ctx.manifest.command = o.command;
    ctx.manifest.argv = o.argv;
    ctx.manifest.config_path = o.config;
    ctx.manifest.plan_path = o.plan;
    ctx.manifest.seed = ctx.train.seed;
    for (const auto& in : {o.data, o.config, o.plan, o.model_file})
        if (!in.empty()) ctx.manifest.inputs.emplace_back(in);
    return ctx;
}

std::vector<TeamGameRecord> load_records(const Options& o, const FeatureSpec& spec) {
    if (o.data.empty()) throw ConfigError("--data is required");
    std::ifstream in(o.data, std::ios::binary);
    if (!in) throw DataError("cannot open '" + o.data + "'");
    return parse_match_csv(in, spec);
}

void emit(Context& ctx, const std::string& name, const std::string& contents) {
    const fs::path path = ctx.out_dir / name;
    write_atomically(path, contents);
    ctx.manifest.outputs.push_back(path);
}

void finish(Context& ctx) { write_manifest(ctx.out_dir, ctx.manifest); }

std::vector<TeamGameRecord> select_league(const std::vector<TeamGameRecord>& records,
                                          const std::string& league, int season) {
    std::vector<std::string> warnings;
    auto out = filter_regular_season(records, league, season, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (out.empty())
        throw DataError("no games for league " + league + " in season " + std::to_string(season));
    return out;
}

std::vector<ModelSpec> requested_models(const Context& ctx, const Options& o) {
    std::vector<ModelSpec> models;
    if (ctx.plan_json.contains("models")) {
        for (const auto& m : ctx.plan_json.at("models")) models.push_back(model_spec_from_json(m, ctx.train));
    } else {
        models = standard_comparison(ctx.train);
    }
    // Explicit flags pin the GCN rows.
    for (auto& m : models) {
        if (m.family != ModelFamily::gcn) continue;
        if (o.model) m.gcn.propagator_kind = ctx.train.propagator_kind;
        if (o.degree) m.gcn.chebyshev_degree = ctx.train.chebyshev_degree;
        if (o.layers) m.gcn.hidden_dims.assign(ctx.train.hidden_dims.size(), m.gcn.hidden_dims.empty() ? 64 : m.gcn.hidden_dims.front());
        if (o.mode) m.mode = ctx.spec.mode;
    }
    return models;
}

}  // namespace

int cmd_ingest(const Options& o) {
    Context ctx = resolve(o);
    auto records = load_records(o, ctx.spec);
    if (!o.league.empty()) records = select_league(records, o.league, ctx.plan.season);
    const FeatureMatrix fm = build_feature_matrix(records, ctx.spec);
    emit(ctx, "features.csv", stringify([&](std::ostream& out) { write_feature_csv(out, fm); }));
    nlohmann::json quality = to_json(fm.quality);
    quality["records"] = records.size();
    quality["mode"] = to_string(ctx.spec.mode);
    emit(ctx, "quality_report.json", quality.dump(2) + "\n");
    finish(ctx);
    std::cerr << "ingested " << records.size() << " records\n";
    return 0;
}

int cmd_build_graph(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    const std::string league = o.league.empty() ? ctx.plan.train_league : o.league;
    const auto league_records = select_league(records, league, ctx.plan.season);
    const FeatureMatrix fm = build_feature_matrix(league_records, ctx.spec);
    LeagueGraph graph = build_league_graph(league_records);
    attach_features(graph, fm);
    graph = assign_labels(std::move(graph), std::max(1, ctx.train.receptive_hops()));
    emit(ctx, "graph.json", to_json(graph).dump() + "\n");
    emit(ctx, "edges.txt", stringify([&](std::ostream& out) { write_edge_list(out, graph); }));
    emit(ctx, "features.csv", stringify([&](std::ostream& out) { write_feature_csv(out, fm); }));
    finish(ctx);
    std::cerr << league << " " << ctx.plan.season << ": " << graph.node_count() << " nodes, "
              << graph.edges.size() << " edges, " << graph.labeled_count() << " labeled\n";
    return 0;
}

int cmd_train(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    const auto run = train_cross_league(records, ctx.plan, ctx.train, ctx.spec);

    // The preprocessing needed to score new data travels with the weights.
    const PreparedSplit split = prepare_split(records, ctx.plan, ctx.spec, ctx.train);
    const auto train_raw = build_feature_matrix(
        filter_regular_season(records, ctx.plan.train_league, ctx.plan.season), ctx.spec);
    nlohmann::json model = to_json(run.trained.model);
    model["preprocessing"] = {{"features", to_json(ctx.spec)},
                              {"impute_means", train_raw.impute_means},
                              {"mean", split.stats.mean},
                              {"stddev", split.stats.stddev}};
    emit(ctx, "model.json", model.dump() + "\n");
    emit(ctx, "train_report.csv",
         stringify([&](std::ostream& out) { write_report_csv(out, run.trained.report); }));
    const nlohmann::json summary = {{"test_accuracy", run.test.accuracy},
                                    {"majority_baseline", run.test.majority_rate},
                                    {"best_epoch", run.trained.report.best_epoch},
                                    {"epochs_run", run.trained.report.epochs_run},
                                    {"plan",
                                     {{"train_league", ctx.plan.train_league},
                                      {"val_league", ctx.plan.val_league},
                                      {"test_league", ctx.plan.test_league},
                                      {"season", ctx.plan.season}}}};
    emit(ctx, "summary.json", summary.dump(2) + "\n");
    finish(ctx);
    std::cerr << "test accuracy " << run.test.accuracy << " (majority " << run.test.majority_rate
              << ")\n";
    return 0;
}

int cmd_predict(const Options& o) {
    if (o.model_file.empty()) throw ConfigError("--model-file is required");
    Context ctx = resolve(o);
    const nlohmann::json j = read_json(o.model_file);
    const GcnModel model = model_from_json(j);
    FeatureSpec spec = ctx.spec;
    std::vector<double> impute;
    ColumnStats stats;
    try {
        const auto& pre = j.at("preprocessing");
        spec = feature_spec_from_json(pre.at("features"));
        impute = pre.at("impute_means").get<std::vector<double>>();
        stats.mean = pre.at("mean").get<std::vector<double>>();
        stats.stddev = pre.at("stddev").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model file lacks preprocessing: ") + e.what());
    }
    const auto records = load_records(o, spec);
    const std::string league = o.league.empty() ? ctx.plan.test_league : o.league;
    const auto league_records = select_league(records, league, ctx.plan.season);
    const FeatureMatrix fm = standardize(build_feature_matrix(league_records, spec, &impute), stats);
    LeagueGraph graph = build_league_graph(league_records);
    attach_features(graph, fm);
    const auto probs = predict(model, graph.features, make_propagator(graph, model.config));

    emit(ctx, "predictions.csv", stringify([&](std::ostream& out) {
             out << "team,gameid,team_game_index,win_probability\n";
             for (std::size_t i = 0; i < graph.nodes.size(); ++i)
                 out << graph.nodes[i].team << ',' << graph.nodes[i].game_id << ','
                     << graph.nodes[i].team_game_index << ',' << nlohmann::json(probs[i]).dump()
                     << '\n';
         }));
    finish(ctx);
    return 0;
}

int cmd_grid_search(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    const GcnGrid grid = ctx.plan_json.contains("gcn_grid") ? gcn_grid_from_json(ctx.plan_json.at("gcn_grid"))
                                                            : GcnGrid::standard();
    const auto report = grid_search_gcn(records, ctx.plan, grid, ctx.train, ctx.spec);
    emit(ctx, "grid_report.csv", stringify([&](std::ostream& out) { write_report_csv(out, report); }));
    emit(ctx, "grid_report.json", to_json(report).dump(2) + "\n");
    finish(ctx);
    const auto& best = report.rows[report.best_row];
    std::cerr << "selected " << best.model << " " << best.parameters << ": validation "
              << best.validation_accuracy << ", test " << best.accuracy << '\n';
    return 0;
}

int cmd_baseline_scope(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    const std::string league = o.league.empty() ? ctx.plan.test_league : o.league;
    ScopeSeasons seasons;
    seasons.init = scope_games(select_league(records, league, ctx.plan.season - 2));
    seasons.validation = scope_games(select_league(records, league, ctx.plan.season - 1));
    seasons.test = scope_games(select_league(records, league, ctx.plan.season));
    const ScopeGrid grid = ctx.plan_json.contains("scope_grid")
                               ? scope_grid_from_json(ctx.plan_json.at("scope_grid"))
                               : ScopeGrid::standard();
    const auto search = scope_grid_search(seasons, grid);
    const auto test = scope_test(seasons, search.best);
    emit(ctx, "scope_grid.csv", stringify([&](std::ostream& out) { write_scope_table_csv(out, search); }));
    const nlohmann::json summary = {{"league", league},
                                    {"best", to_json(search.best)},
                                    {"validation_accuracy", search.best_accuracy},
                                    {"test_accuracy", test.accuracy},
                                    {"test_games", test.total}};
    emit(ctx, "scope_report.json", summary.dump(2) + "\n");
    finish(ctx);
    std::cerr << "SCOPE " << league << ": validation " << search.best_accuracy << ", test "
              << test.accuracy << '\n';
    return 0;
}

int cmd_baseline_forest(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    ForestConfig fc;
    if (ctx.config.contains("forest")) {
        const auto& f = ctx.config.at("forest");
        fc.n_trees = f.value("n_trees", fc.n_trees);
        fc.max_depth = f.value("max_depth", fc.max_depth);
        fc.min_leaf = f.value("min_leaf", fc.min_leaf);
    }
    const auto train_records = select_league(records, ctx.plan.train_league, ctx.plan.season);
    const auto test_records = select_league(records, ctx.plan.test_league, ctx.plan.season);

    ExperimentReport report;
    double best = -1.0;
    for (const auto mode : {FeatureMode::raw, FeatureMode::delta}) {
        if (o.mode && mode != ctx.spec.mode) continue;
        FeatureSpec spec = ctx.spec;
        spec.mode = mode;
        for (int lookback : {1, 3, 5}) {
            const auto train_rows = lookback_dataset(train_records, spec, lookback);
            const auto test_rows = lookback_dataset(test_records, spec, lookback);
            std::vector<double> accs;
            std::size_t majority_hits = 0;
            for (int y : test_rows.labels) majority_hits += static_cast<std::size_t>(y);
            for (auto seed : ctx.seeds) {
                fc.seed = seed;
                const Forest forest = forest_train(train_rows.rows, train_rows.labels, fc);
                accs.push_back(forest_accuracy(forest, test_rows.rows, test_rows.labels));
            }
            ReportRow row;
            row.model = "Random Forest (lookback=" + std::to_string(lookback) + ")";
            row.family = ModelFamily::random_forest;
            row.mode = std::string(to_string(mode));
            row.parameters = nlohmann::json{{"lookback", lookback},
                                            {"n_trees", fc.n_trees},
                                            {"max_depth", fc.max_depth},
                                            {"min_leaf", fc.min_leaf}}
                                 .dump();
            double sum = 0.0, sq = 0.0;
            for (double a : accs) sum += a;
            row.accuracy = sum / static_cast<double>(accs.size());
            for (double a : accs) sq += (a - row.accuracy) * (a - row.accuracy);
            row.accuracy_std = std::sqrt(sq / static_cast<double>(accs.size()));
            row.n_seeds = accs.size();
            const double n = static_cast<double>(test_rows.labels.size());
            row.majority_baseline =
                std::max(static_cast<double>(majority_hits), n - static_cast<double>(majority_hits)) / n;
            if (row.accuracy > best) {
                best = row.accuracy;
                report.best_row = report.rows.size();
            }
            report.rows.push_back(std::move(row));
        }
    }
    emit(ctx, "forest_report.csv", stringify([&](std::ostream& out) { write_report_csv(out, report); }));
    finish(ctx);
    return 0;
}

int cmd_compare(const Options& o) {
    Context ctx = resolve(o);
    const auto records = load_records(o, ctx.spec);
    CompareOptions opts;
    opts.models = requested_models(ctx, o);
    opts.seeds = ctx.seeds;
    const auto report = compare_all(records, ctx.plan, opts, ctx.spec);
    emit(ctx, "report.csv", stringify([&](std::ostream& out) { write_report_csv(out, report); }));
    emit(ctx, "report.json", to_json(report).dump(2) + "\n");
    finish(ctx);
    for (const auto& r : report.rows)
        std::cerr << r.model << ": " << (r.status == "ok" ? std::to_string(r.accuracy) : r.status) << '\n';
    return 0;
}

int cmd_simulate(const Options& o) {
    if (o.out.empty()) throw ConfigError("--out <csv> is required");
    SynthConfig config = o.config.empty() ? SynthConfig{} : synth_config_from_json(read_json(o.config));
    if (o.seed) config.seed = *o.seed;
    const auto records = generate_leagues(config);

    const fs::path csv_path = o.out;
    write_atomically(csv_path, emit_csv(records, config.spec));
    RunManifest manifest;
    manifest.command = o.command;
    manifest.argv = o.argv;
    manifest.config_path = o.config;
    manifest.seed = config.seed;
    if (!o.config.empty()) manifest.inputs.emplace_back(o.config);
    manifest.outputs.push_back(csv_path);
    write_manifest(csv_path.has_parent_path() ? csv_path.parent_path() : fs::path("."), manifest);
    std::cerr << "wrote " << records.size() << " records to " << csv_path.string() << '\n';
    return 0;
}

}  // namespace gcnwp::cli
