#include "gcnwp/scope.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "csv.hpp"
#include "gcnwp/error.hpp"

namespace gcnwp {

namespace {

double mov_shape(MovFunction f, double d, double w90) {
    switch (f) {
        case MovFunction::lin: return d;
        case MovFunction::exp: return std::exp(d / w90) - 1.0;
        case MovFunction::log: return std::log1p(d);
        case MovFunction::sqrt: return std::sqrt(d);
        case MovFunction::none: break;
    }
    return 0.0;
}

std::vector<double> doubles(const nlohmann::json& j, const char* key,
                            const std::vector<double>& fallback) {
    return j.contains(key) ? j.at(key).get<std::vector<double>>() : fallback;
}

}  // namespace

std::string_view to_string(MovFunction f) {
    switch (f) {
        case MovFunction::none: return "none";
        case MovFunction::lin: return "lin";
        case MovFunction::exp: return "exp";
        case MovFunction::log: return "log";
        case MovFunction::sqrt: return "sqrt";
    }
    return "none";
}

MovFunction parse_mov_function(std::string_view s) {
    for (auto f : {MovFunction::none, MovFunction::lin, MovFunction::exp, MovFunction::log,
                   MovFunction::sqrt})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown MoV function '" + std::string(s) + "'");
}

void ScopeConfig::validate() const {
    if (!(base_k >= 0.0)) throw ConfigError("scope: base_k must be >= 0");
    if (!(reduction >= 0.0 && reduction < 1.0)) throw ConfigError("scope: reduction must lie in [0, 1)");
    if (!(regression >= 0.0 && regression <= 1.0))
        throw ConfigError("scope: regression must lie in [0, 1]");
    if (mov != MovFunction::none && !(w90 > 0.0))
        throw ConfigError("scope: w90 must be > 0 when a MoV function is used");
}

nlohmann::json to_json(const ScopeConfig& c) {
    return {{"base_k", c.base_k},         {"cutoff", c.cutoff},
            {"reduction", c.reduction},   {"mov", to_string(c.mov)},
            {"w90", c.w90},               {"regression", c.regression},
            {"initial_rating", c.initial_rating}};
}

ScopeConfig scope_config_from_json(const nlohmann::json& j, ScopeConfig c) {
    try {
        if (j.contains("base_k")) c.base_k = j.at("base_k").get<double>();
        if (j.contains("cutoff")) c.cutoff = j.at("cutoff").get<double>();
        if (j.contains("reduction")) c.reduction = j.at("reduction").get<double>();
        if (j.contains("mov")) c.mov = parse_mov_function(j.at("mov").get<std::string>());
        if (j.contains("w90")) c.w90 = j.at("w90").get<double>();
        if (j.contains("regression")) c.regression = j.at("regression").get<double>();
        if (j.contains("initial_rating")) c.initial_rating = j.at("initial_rating").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scope config: ") + e.what());
    }
    c.validate();
    return c;
}

double ScopeState::rating(const std::string& team, const ScopeConfig& config) const {
    auto it = ratings.find(team);
    return it == ratings.end() ? config.initial_rating : it->second;
}

std::vector<ScopeGame> scope_games(const std::vector<TeamGameRecord>& records) {
    std::vector<const TeamGameRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return std::tie(a->league, a->season, a->timestamp, a->game_id, a->team) <
               std::tie(b->league, b->season, b->timestamp, b->game_id, b->team);
    });
    std::vector<ScopeGame> games;
    std::unordered_map<std::string, bool> seen;
    for (const auto* r : sorted) {
        if (!seen.emplace(r->game_id, true).second) continue;
        games.push_back({r->team, r->opponent, r->won, std::abs(r->kills - r->opponent_kills)});
    }
    return games;
}

double elo_expected(double r_a, double r_b) {
    // Evaluate the favourite's side and complement the other, so that
    // E(a, b) + E(b, a) == 1 holds exactly (1 - e is exact for e >= 0.5).
    if (r_a < r_b) return 1.0 - elo_expected(r_b, r_a);
    return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

double mov_multiplier(int kill_diff, const ScopeConfig& config) {
    if (kill_diff < 0) throw ContractError("mov_multiplier: kill difference must be >= 0");
    if (config.mov == MovFunction::none) return 1.0;
    if (!(config.w90 > 0.0)) throw ConfigError("scope: w90 must be > 0 when a MoV function is used");
    const double d = static_cast<double>(kill_diff);
    return 1.0 + mov_shape(config.mov, d, config.w90) / mov_shape(config.mov, config.w90, config.w90);
}

ScopeState& scope_update(ScopeState& state, const ScopeGame& game, const ScopeConfig& config) {
    const double r_team = state.rating(game.team, config);
    const double r_opp = state.rating(game.opponent, config);
    const double expected = elo_expected(r_team, r_opp);
    const double mov = mov_multiplier(game.kill_diff, config);
    auto k_eff = [&](double r) {
        return config.base_k * (r > config.cutoff ? 1.0 - config.reduction : 1.0) * mov;
    };
    const double outcome = game.team_won ? 1.0 : 0.0;
    state.ratings[game.team] = r_team + k_eff(r_team) * (outcome - expected);
    state.ratings[game.opponent] = r_opp + k_eff(r_opp) * ((1.0 - outcome) - (1.0 - expected));
    ++state.games_processed;
    return state;
}

ScopeState& scope_season_regress(ScopeState& state, const ScopeConfig& config) {
    for (auto& [team, r] : state.ratings) r += config.regression * (config.initial_rating - r);
    return state;
}

ScopeEvaluation scope_evaluate(const std::vector<ScopeGame>& games, const ScopeConfig& config,
                               ScopeState state) {
    if (games.empty()) throw ContractError("scope_evaluate: empty game span");
    ScopeEvaluation ev;
    ev.expected.reserve(games.size());
    for (const auto& g : games) {
        const double e = elo_expected(state.rating(g.team, config), state.rating(g.opponent, config));
        ev.expected.push_back(e);
        const bool predict_team = e >= 0.5;
        if (predict_team == g.team_won) ++ev.correct;
        scope_update(state, g, config);
    }
    ev.total = games.size();
    ev.accuracy = static_cast<double>(ev.correct) / static_cast<double>(ev.total);
    ev.final_state = std::move(state);
    return ev;
}

ScopeEvaluation scope_validate(const ScopeSeasons& seasons, const ScopeConfig& config) {
    ScopeState state;
    for (const auto& g : seasons.init) scope_update(state, g, config);
    scope_season_regress(state, config);
    return scope_evaluate(seasons.validation, config, std::move(state));
}

ScopeEvaluation scope_test(const ScopeSeasons& seasons, const ScopeConfig& config) {
    ScopeState state;
    for (const auto& g : seasons.init) scope_update(state, g, config);
    scope_season_regress(state, config);
    for (const auto& g : seasons.validation) scope_update(state, g, config);
    scope_season_regress(state, config);
    return scope_evaluate(seasons.test, config, std::move(state));
}

ScopeGrid ScopeGrid::standard() {
    ScopeGrid g;
    g.base_k = {5, 10, 20, 30, 40, 50};
    g.cutoff = {1600, 1650, 1700, 1750};
    g.reduction = {0.1, 0.2, 0.3, 0.4, 0.5};
    g.mov = {MovFunction::none, MovFunction::lin, MovFunction::exp, MovFunction::log};
    g.w90 = {100, 200, 300, 400, 500};
    g.regression = {0, 0.1, 0.2, 0.3, 0.4};
    return g;
}

ScopeGrid ScopeGrid::single(const ScopeConfig& c) {
    ScopeGrid g;
    g.base_k = {c.base_k};
    g.cutoff = {c.cutoff};
    g.reduction = {c.reduction};
    g.mov = {c.mov};
    g.w90 = {c.w90};
    g.regression = {c.regression};
    g.initial_rating = c.initial_rating;
    return g;
}

std::size_t ScopeGrid::size() const {
    return base_k.size() * cutoff.size() * reduction.size() * mov.size() * w90.size() *
           regression.size();
}

ScopeConfig ScopeGrid::at(std::size_t index) const {
    if (index >= size()) throw ContractError("ScopeGrid::at: index out of range");
    ScopeConfig c;
    c.initial_rating = initial_rating;
    c.regression = regression[index % regression.size()];
    index /= regression.size();
    c.w90 = w90[index % w90.size()];
    index /= w90.size();
    c.mov = mov[index % mov.size()];
    index /= mov.size();
    c.reduction = reduction[index % reduction.size()];
    index /= reduction.size();
    c.cutoff = cutoff[index % cutoff.size()];
    index /= cutoff.size();
    c.base_k = base_k[index];
    return c;
}

nlohmann::json to_json(const ScopeGrid& g) {
    std::vector<std::string> mov;
    for (auto f : g.mov) mov.emplace_back(to_string(f));
    return {{"base_k", g.base_k}, {"cutoff", g.cutoff}, {"reduction", g.reduction},
            {"mov", mov},         {"w90", g.w90},       {"regression", g.regression},
            {"initial_rating", g.initial_rating}};
}

ScopeGrid scope_grid_from_json(const nlohmann::json& j) {
    const ScopeGrid d = ScopeGrid::standard();
    ScopeGrid g;
    try {
        g.base_k = doubles(j, "base_k", d.base_k);
        g.cutoff = doubles(j, "cutoff", d.cutoff);
        g.reduction = doubles(j, "reduction", d.reduction);
        g.w90 = doubles(j, "w90", d.w90);
        g.regression = doubles(j, "regression", d.regression);
        if (j.contains("mov")) {
            for (const auto& m : j.at("mov")) g.mov.push_back(parse_mov_function(m.get<std::string>()));
        } else {
            g.mov = d.mov;
        }
        if (j.contains("initial_rating")) g.initial_rating = j.at("initial_rating").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scope grid: ") + e.what());
    }
    if (g.size() == 0) throw ConfigError("scope grid: every axis needs at least one value");
    for (std::size_t i = 0; i < g.size(); ++i) g.at(i).validate();
    return g;
}

ScopeGridResult scope_grid_search(const ScopeSeasons& seasons, const ScopeGrid& grid) {
    const std::size_t n = grid.size();
    if (n == 0) throw ContractError("scope_grid_search: empty grid");
    ScopeGridResult result;
    result.rows.resize(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
    // Each config owns its rating state, so cells are independent.
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const ScopeConfig c = grid.at(ui);
        result.rows[ui] = {c, scope_validate(seasons, c).accuracy};
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (result.rows[i].validation_accuracy > result.rows[best].validation_accuracy) best = i;
    result.best = result.rows[best].config;
    result.best_accuracy = result.rows[best].validation_accuracy;
    return result;
}

void write_scope_table_csv(std::ostream& out, const ScopeGridResult& result) {
    out << "base_k,cutoff,reduction,mov,w90,regression,validation_accuracy\n";
    for (const auto& r : result.rows)
        out << csv::format_double(r.config.base_k) << ',' << csv::format_double(r.config.cutoff)
            << ',' << csv::format_double(r.config.reduction) << ',' << to_string(r.config.mov) << ','
            << csv::format_double(r.config.w90) << ',' << csv::format_double(r.config.regression)
            << ',' << csv::format_double(r.validation_accuracy) << '\n';
}

}  // namespace gcnwp
