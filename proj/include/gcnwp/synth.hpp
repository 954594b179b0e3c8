#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/ingest.hpp"

namespace gcnwp {

/// How one feature column responds to a game. For a team with latent skill
/// s facing skill s_opp:
///   value = base + scale * (skill_coef * (s - s_opp) + outcome_coef * (+1 win / -1 loss)
///                           + noise_std * N(0, 1))
struct FeatureSignal {
    double base = 0.0;
    double scale = 1.0;
    double skill_coef = 0.0;
    double outcome_coef = 0.0;
};

struct SynthConfig {
    std::vector<std::string> leagues = {"LPL", "LCK", "LCS"};
    int n_teams = 10;
    int games_per_pair = 2;
    int seasons = 3;
    int first_season = 2018;
    double latent_skill_std = 1.0;
    double feature_noise_std = 1.0;
    /// Correlation of a team's skill between consecutive seasons.
    double season_carryover = 0.7;
    FeatureSpec spec = FeatureSpec::default_spec();
    /// Missing entries fall back to the default signal for that feature.
    std::map<std::string, FeatureSignal> signals;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Signal used for a feature absent from SynthConfig::signals.
FeatureSignal default_signal(const std::string& feature);

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& c);

/// Latent skills drawn for one league, one vector per season.
struct LeagueTruth {
    std::vector<std::string> teams;
    std::vector<std::vector<double>> skills;  // [season][team]
};

/// Round-robin seasons of one league with Bradley-Terry outcomes
/// P(a beats b) = 1 / (1 + exp(-(s_a - s_b))). Records are canonicalized.
std::vector<TeamGameRecord> generate_league(const SynthConfig& config, const std::string& league,
                                            LeagueTruth* truth = nullptr);
/// All configured leagues, each from its own seeded stream.
std::vector<TeamGameRecord> generate_leagues(const SynthConfig& config);

/// Inverse of parse_match_csv for `spec`: the required columns, the
/// is_regular_season flag and one column per feature.
void emit_csv(std::ostream& out, const std::vector<TeamGameRecord>& records, const FeatureSpec& spec);
std::string emit_csv(const std::vector<TeamGameRecord>& records, const FeatureSpec& spec);

}  // namespace gcnwp
