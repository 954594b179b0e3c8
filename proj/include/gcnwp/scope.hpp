#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/ingest.hpp"

namespace gcnwp {

/// Margin-of-victory shape f(d); the multiplier is 1 + f(d) / f(w90).
enum class MovFunction { none, lin, exp, log, sqrt };

std::string_view to_string(MovFunction f);
MovFunction parse_mov_function(std::string_view s);

/// Elo variant with a rating cutoff, K reduction above it, a margin-of-victory
/// multiplier and regression to the mean between seasons.
struct ScopeConfig {
    double base_k = 40.0;
    double cutoff = 1700.0;
    double reduction = 0.5;  // K is scaled by (1 - reduction) above the cutoff
    MovFunction mov = MovFunction::none;
    double w90 = 100.0;
    double regression = 0.4;
    double initial_rating = 1500.0;

    void validate() const;
    bool operator==(const ScopeConfig&) const = default;
};

nlohmann::json to_json(const ScopeConfig& c);
ScopeConfig scope_config_from_json(const nlohmann::json& j, ScopeConfig base = {});

struct ScopeState {
    std::map<std::string, double> ratings;
    std::size_t games_processed = 0;

    /// Current rating, or the initial rating for a team not seen yet.
    double rating(const std::string& team, const ScopeConfig& config) const;
};

/// One game seen from its first-listed side.
struct ScopeGame {
    std::string team;
    std::string opponent;
    bool team_won = false;
    int kill_diff = 0;  // winner's kills minus loser's kills
};

/// One game per game id in chronological order; the first-listed side is the
/// lexicographically smaller team name.
std::vector<ScopeGame> scope_games(const std::vector<TeamGameRecord>& records);

/// Probability that a team rated r_a beats a team rated r_b.
double elo_expected(double r_a, double r_b);

double mov_multiplier(int kill_diff, const ScopeConfig& config);

/// Updates both teams from their pre-game ratings. Unseen teams enter at the
/// initial rating.
ScopeState& scope_update(ScopeState& state, const ScopeGame& game, const ScopeConfig& config);

/// Pulls every rating toward the initial rating by the regression fraction.
ScopeState& scope_season_regress(ScopeState& state, const ScopeConfig& config);

struct ScopeEvaluation {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<double> expected;  // pre-game win probability of the first-listed side
    ScopeState final_state;
};

/// Predicts each game from the current ratings (ties go to the first-listed
/// side), then applies the update.
ScopeEvaluation scope_evaluate(const std::vector<ScopeGame>& games, const ScopeConfig& config,
                               ScopeState state = {});

/// Three consecutive seasons: ratings are initialised on the first,
/// parameters chosen on the second, accuracy reported on the third.
struct ScopeSeasons {
    std::vector<ScopeGame> init;
    std::vector<ScopeGame> validation;
    std::vector<ScopeGame> test;
};

/// Runs the init season, regresses, evaluates the validation season.
ScopeEvaluation scope_validate(const ScopeSeasons& seasons, const ScopeConfig& config);
/// Runs init and validation seasons (regressing at each boundary), evaluates test.
ScopeEvaluation scope_test(const ScopeSeasons& seasons, const ScopeConfig& config);

/// Cartesian lattice of configs, enumerated with base_k varying slowest and
/// regression fastest.
struct ScopeGrid {
    std::vector<double> base_k;
    std::vector<double> cutoff;
    std::vector<double> reduction;
    std::vector<MovFunction> mov;
    std::vector<double> w90;
    std::vector<double> regression;
    double initial_rating = 1500.0;

    /// The lattice the baseline was tuned over (12000 configs).
    static ScopeGrid standard();
    static ScopeGrid single(const ScopeConfig& c);

    std::size_t size() const;
    ScopeConfig at(std::size_t index) const;
};

nlohmann::json to_json(const ScopeGrid& g);
ScopeGrid scope_grid_from_json(const nlohmann::json& j);

struct ScopeGridRow {
    ScopeConfig config;
    double validation_accuracy = 0.0;
};

struct ScopeGridResult {
    ScopeConfig best;
    double best_accuracy = 0.0;
    std::vector<ScopeGridRow> rows;  // grid order
};

/// Exhaustive validation-season search; ties go to the earliest config.
ScopeGridResult scope_grid_search(const ScopeSeasons& seasons, const ScopeGrid& grid);

void write_scope_table_csv(std::ostream& out, const ScopeGridResult& result);

}  // namespace gcnwp
