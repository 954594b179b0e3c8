#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gcnwp::cli {

/// Flags shared by all subcommands; unset optionals fall back to the config
/// and plan files, then to library defaults.
struct Options {
    std::string command;
    std::vector<std::string> argv;
    std::string data;
    std::string config;
    std::string plan;
    std::string out;
    std::string model_file;
    std::string league;
    std::optional<int> season;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<std::string> mode;
    std::optional<std::string> model;
    std::optional<int> layers;
    std::optional<int> degree;
};

int cmd_ingest(const Options& o);
int cmd_build_graph(const Options& o);
int cmd_train(const Options& o);
int cmd_predict(const Options& o);
int cmd_grid_search(const Options& o);
int cmd_baseline_scope(const Options& o);
int cmd_baseline_forest(const Options& o);
int cmd_compare(const Options& o);
int cmd_simulate(const Options& o);

}  // namespace gcnwp::cli
