#include "gcnwp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "gcnwp/error.hpp"
#include "gcnwp/gcn.hpp"

namespace gcnwp {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Box-Muller on the library's 53-bit uniforms.
double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Circle-method round robin: rounds of disjoint pairings covering every pair once.
std::vector<std::vector<std::pair<int, int>>> round_robin(int n) {
    std::vector<int> slots(static_cast<std::size_t>(n % 2 == 0 ? n : n + 1));
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
    const int bye = n % 2 == 0 ? -1 : n;
    const std::size_t m = slots.size();
    std::vector<std::vector<std::pair<int, int>>> rounds;
    for (std::size_t r = 0; r + 1 < m; ++r) {
        std::vector<std::pair<int, int>> round;
        for (std::size_t i = 0; i < m / 2; ++i) {
            const int a = slots[i];
            const int b = slots[m - 1 - i];
            if (a == bye || b == bye) continue;
            round.emplace_back(r % 2 == 0 ? a : b, r % 2 == 0 ? b : a);
        }
        rounds.push_back(std::move(round));
        std::rotate(slots.begin() + 1, slots.end() - 1, slots.end());
    }
    return rounds;
}

}  // namespace

FeatureSignal default_signal(const std::string& feature) {
    struct Entry {
        const char* name;
        FeatureSignal signal;
    };
    static const Entry table[] = {
        {"towers", {6.0, 2.5, 0.4, 0.8}},
        {"inhibitors", {1.0, 0.8, 0.3, 0.7}},
        {"dragons", {2.2, 1.0, 0.4, 0.5}},
        {"barons", {0.7, 0.5, 0.3, 0.6}},
        {"heralds", {1.0, 0.5, 0.3, 0.3}},
        {"first_tower", {0.5, 0.3, 0.3, 0.3}},
        {"first_dragon", {0.5, 0.3, 0.2, 0.2}},
        {"first_baron", {0.5, 0.3, 0.3, 0.5}},
        {"total_cs", {1050.0, 60.0, 0.6, 0.3}},
        {"jungle_cs", {230.0, 20.0, 0.5, 0.2}},
        {"cs_per_min", {32.0, 1.5, 0.6, 0.3}},
        {"total_gold", {56000.0, 4000.0, 0.5, 0.6}},
        {"gold_per_min", {1750.0, 120.0, 0.5, 0.6}},
        {"gold_diff_at_10", {0.0, 900.0, 0.6, 0.2}},
        {"gold_diff_at_15", {0.0, 1500.0, 0.6, 0.3}},
        {"xp_diff_at_10", {0.0, 700.0, 0.5, 0.2}},
        {"assists", {30.0, 8.0, 0.4, 0.5}},
        {"double_kills", {1.5, 1.0, 0.2, 0.2}},
        {"triple_kills", {0.3, 0.4, 0.1, 0.1}},
        {"quadra_kills", {0.08, 0.2, 0.05, 0.05}},
        {"penta_kills", {0.02, 0.1, 0.02, 0.02}},
        {"first_blood", {0.5, 0.3, 0.2, 0.1}},
        {"kills_per_min", {0.4, 0.12, 0.4, 0.5}},
        {"wards_placed", {120.0, 15.0, 0.3, 0.1}},
        {"wards_killed", {50.0, 10.0, 0.3, 0.2}},
        {"control_wards", {45.0, 8.0, 0.3, 0.1}},
        {"vision_score", {260.0, 30.0, 0.3, 0.2}},
        {"vision_score_per_min", {8.0, 0.9, 0.3, 0.2}},
    };
    for (const auto& e : table)
        if (feature == e.name) return e.signal;
    return {0.0, 1.0, 0.3, 0.3};
}

void SynthConfig::validate() const {
    if (leagues.empty()) throw ConfigError("synth: at least one league is required");
    if (std::set<std::string>(leagues.begin(), leagues.end()).size() != leagues.size())
        throw ConfigError("synth: duplicate league code");
    if (n_teams < 2) throw ConfigError("synth: n_teams must be >= 2");
    if (games_per_pair < 1) throw ConfigError("synth: games_per_pair must be >= 1");
    if (seasons < 1) throw ConfigError("synth: seasons must be >= 1");
    if (!(latent_skill_std >= 0.0) || !(feature_noise_std >= 0.0))
        throw ConfigError("synth: standard deviations must be >= 0");
    if (!(season_carryover >= 0.0 && season_carryover <= 1.0))
        throw ConfigError("synth: season_carryover must lie in [0, 1]");
    spec.validate();
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        if (j.contains("leagues")) c.leagues = j.at("leagues").get<std::vector<std::string>>();
        if (j.contains("n_teams")) c.n_teams = j.at("n_teams").get<int>();
        if (j.contains("games_per_pair")) c.games_per_pair = j.at("games_per_pair").get<int>();
        if (j.contains("seasons")) c.seasons = j.at("seasons").get<int>();
        if (j.contains("first_season")) c.first_season = j.at("first_season").get<int>();
        if (j.contains("latent_skill_std")) c.latent_skill_std = j.at("latent_skill_std").get<double>();
        if (j.contains("feature_noise_std"))
            c.feature_noise_std = j.at("feature_noise_std").get<double>();
        if (j.contains("season_carryover")) c.season_carryover = j.at("season_carryover").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("features")) c.spec = feature_spec_from_json(j.at("features"));
        if (j.contains("signals"))
            for (const auto& [name, s] : j.at("signals").items()) {
                FeatureSignal sig = default_signal(name);
                sig.base = s.value("base", sig.base);
                sig.scale = s.value("scale", sig.scale);
                sig.skill_coef = s.value("skill_coef", sig.skill_coef);
                sig.outcome_coef = s.value("outcome_coef", sig.outcome_coef);
                c.signals[name] = sig;
            }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SynthConfig& c) {
    nlohmann::json signals = nlohmann::json::object();
    for (const auto& [name, s] : c.signals)
        signals[name] = {{"base", s.base},
                         {"scale", s.scale},
                         {"skill_coef", s.skill_coef},
                         {"outcome_coef", s.outcome_coef}};
    return {{"leagues", c.leagues},
            {"n_teams", c.n_teams},
            {"games_per_pair", c.games_per_pair},
            {"seasons", c.seasons},
            {"first_season", c.first_season},
            {"latent_skill_std", c.latent_skill_std},
            {"feature_noise_std", c.feature_noise_std},
            {"season_carryover", c.season_carryover},
            {"seed", c.seed},
            {"features", to_json(c.spec)},
            {"signals", signals}};
}

std::vector<TeamGameRecord> generate_league(const SynthConfig& config, const std::string& league,
                                            LeagueTruth* truth) {
    config.validate();
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(league)),
                      static_cast<std::uint32_t>(fnv1a(league) >> 32)};
    std::mt19937_64 rng(seq);

    const auto n = static_cast<std::size_t>(config.n_teams);
    std::vector<std::string> teams(n);
    for (std::size_t t = 0; t < n; ++t) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s-T%02zu", league.c_str(), t + 1);
        teams[t] = buf;
    }
    std::vector<FeatureSignal> signals;
    for (const auto& name : config.spec.names) {
        auto it = config.signals.find(name);
        signals.push_back(it != config.signals.end() ? it->second : default_signal(name));
    }

    const auto schedule = round_robin(config.n_teams);
    std::vector<double> skill(n);
    for (auto& s : skill) s = config.latent_skill_std * standard_normal(rng);
    if (truth) truth->teams = teams;

    std::vector<TeamGameRecord> records;
    for (int season_i = 0; season_i < config.seasons; ++season_i) {
        const int season = config.first_season + season_i;
        if (season_i > 0) {
            const double rho = config.season_carryover;
            for (auto& s : skill)
                s = rho * s + std::sqrt(1.0 - rho * rho) * config.latent_skill_std * standard_normal(rng);
        }
        if (truth) truth->skills.push_back(skill);

        const auto start = std::chrono::sys_days{std::chrono::year{season} / std::chrono::January / 10};
        std::size_t game_no = 0;
        int day = 0;
        for (int meeting = 0; meeting < config.games_per_pair; ++meeting) {
            for (const auto& round : schedule) {
                int slot = 0;
                for (auto [a, b] : round) {
                    if (meeting % 2 == 1) std::swap(a, b);
                    const auto ua = static_cast<std::size_t>(a);
                    const auto ub = static_cast<std::size_t>(b);
                    const double p_a = 1.0 / (1.0 + std::exp(-(skill[ua] - skill[ub])));
                    const bool a_won = uniform01(rng) < p_a;
                    const Timestamp ts = start + std::chrono::days{day} + std::chrono::hours{10 + slot};

                    auto kills_for = [&](double gap, bool won) {
                        const double mean = 13.0 + 3.0 * gap + (won ? 4.0 : -4.0) +
                                            2.5 * config.feature_noise_std * standard_normal(rng);
                        return std::max(0, static_cast<int>(std::lround(mean)));
                    };
                    const int kills_a = kills_for(skill[ua] - skill[ub], a_won);
                    const int kills_b = kills_for(skill[ub] - skill[ua], !a_won);

                    char id[96];
                    std::snprintf(id, sizeof id, "%s%d-%05zu", league.c_str(), season, game_no++);
                    for (int side = 0; side < 2; ++side) {
                        const std::size_t me = side == 0 ? ua : ub;
                        const std::size_t opp = side == 0 ? ub : ua;
                        const bool won = side == 0 ? a_won : !a_won;
                        TeamGameRecord r;
                        r.game_id = id;
                        r.league = league;
                        r.season = season;
                        r.team = teams[me];
                        r.opponent = teams[opp];
                        r.timestamp = ts;
                        r.won = won;
                        r.kills = side == 0 ? kills_a : kills_b;
                        r.opponent_kills = side == 0 ? kills_b : kills_a;
                        for (std::size_t f = 0; f < config.spec.names.size(); ++f) {
                            const auto& name = config.spec.names[f];
                            if (name == "kills") {
                                r.features[name] = r.kills;
                            } else if (name == "deaths") {
                                r.features[name] = r.opponent_kills;
                            } else {
                                const auto& s = signals[f];
                                r.features[name] =
                                    s.base + s.scale * (s.skill_coef * (skill[me] - skill[opp]) +
                                                        s.outcome_coef * (won ? 1.0 : -1.0) +
                                                        config.feature_noise_std * standard_normal(rng));
                            }
                        }
                        records.push_back(std::move(r));
                    }
                    ++slot;
                }
                ++day;
            }
        }
    }
    canonicalize(records);
    return records;
}

std::vector<TeamGameRecord> generate_leagues(const SynthConfig& config) {
    std::vector<TeamGameRecord> all;
    for (const auto& league : config.leagues) {
        auto records = generate_league(config, league);
        all.insert(all.end(), std::make_move_iterator(records.begin()),
                   std::make_move_iterator(records.end()));
    }
    canonicalize(all);
    return all;
}

void emit_csv(std::ostream& out, const std::vector<TeamGameRecord>& records, const FeatureSpec& spec) {
    const auto& required = required_columns();
    std::vector<std::string> extra;
    for (const auto& name : spec.names)
        if (std::find(required.begin(), required.end(), name) == required.end()) extra.push_back(name);

    bool first = true;
    for (const auto& c : required) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    out << ",is_regular_season";
    for (const auto& c : extra) out << ',' << csv::escape(c);
    out << '\n';

    for (const auto& r : records) {
        out << csv::escape(r.game_id) << ',' << csv::escape(r.league) << ',' << r.season << ','
            << format_timestamp(r.timestamp) << ',' << csv::escape(r.team) << ','
            << csv::escape(r.opponent) << ',' << (r.won ? 1 : 0) << ',' << r.kills << ','
            << r.opponent_kills << ',' << (r.regular_season ? 1 : 0);
        for (const auto& c : extra) {
            auto it = r.features.find(c);
            out << ',' << (it == r.features.end() ? std::string() : csv::format_double(it->second));
        }
        out << '\n';
    }
}

std::string emit_csv(const std::vector<TeamGameRecord>& records, const FeatureSpec& spec) {
    std::ostringstream out;
    emit_csv(out, records, spec);
    return out.str();
}

}  // namespace gcnwp
