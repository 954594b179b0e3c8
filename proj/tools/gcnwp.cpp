#include <exception>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gcnwp/error.hpp"
#include "gcnwp/kernels.hpp"

namespace {

using Handler = int (*)(const gcnwp::cli::Options&);

void add_common(CLI::App* sub, gcnwp::cli::Options& o) {
    sub->add_option("--data", o.data, "Match CSV");
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--plan", o.plan, "JSON split plan");
    sub->add_option("--seed", o.seed, "Random seed (overrides plan seeds)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--mode", o.mode, "Feature mode")->check(CLI::IsMember({"raw", "delta"}));
    sub->add_option("--model", o.model, "GCN propagator")->check(CLI::IsMember({"gcn", "gcn-cheby"}));
    sub->add_option("--layers", o.layers, "Hidden graph convolutions")->check(CLI::PositiveNumber);
    sub->add_option("--degree", o.degree, "Chebyshev degree")->check(CLI::PositiveNumber);
    sub->add_option("--league", o.league, "League to operate on");
    sub->add_option("--season", o.season, "Season (overrides plan)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph convolutional win prediction for esports leagues"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "gcnwp 0.1.0");

    gcnwp::cli::Options opts;
    for (int i = 0; i < argc; ++i) opts.argv.emplace_back(argv[i]);

    const std::map<std::string, std::pair<Handler, std::string>> commands = {
        {"ingest", {gcnwp::cli::cmd_ingest, "Validate match data and write feature matrix"}},
        {"build-graph", {gcnwp::cli::cmd_build_graph, "Build one league-season graph"}},
        {"train", {gcnwp::cli::cmd_train, "Train a GCN across leagues"}},
        {"predict", {gcnwp::cli::cmd_predict, "Score a league with a saved model"}},
        {"grid-search", {gcnwp::cli::cmd_grid_search, "Search the GCN hyperparameter grid"}},
        {"baseline-scope", {gcnwp::cli::cmd_baseline_scope, "Run the SCOPE rating baseline"}},
        {"baseline-forest", {gcnwp::cli::cmd_baseline_forest, "Run the random forest baseline"}},
        {"compare", {gcnwp::cli::cmd_compare, "Run every model and write a comparison"}},
        {"simulate", {gcnwp::cli::cmd_simulate, "Write a synthetic league CSV"}},
    };
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.second);
        add_common(sub, opts);
        if (name == "predict") sub->add_option("--model-file", opts.model_file, "Trained model JSON")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    opts.command = chosen->get_name();
    if (opts.threads > 0) gcnwp::kernels::set_threads(opts.threads);
    try {
        return commands.at(opts.command).first(opts);
    } catch (const gcnwp::Error& e) {
        std::cerr << "gcnwp " << opts.command << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "gcnwp " << opts.command << ": " << e.what() << '\n';
        return 1;
    }
}
