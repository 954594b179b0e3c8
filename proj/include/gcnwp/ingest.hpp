#pragma once

#include <chrono>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnwp/matrix.hpp"

namespace gcnwp {

using Timestamp = std::chrono::sys_seconds;

enum class FeatureCategory { objectives, farm, gold_experience, fighting, vision };
enum class FeatureMode { raw, delta };

std::string_view to_string(FeatureCategory c);
std::string_view to_string(FeatureMode m);
FeatureCategory parse_category(std::string_view s);
FeatureMode parse_mode(std::string_view s);

/// Ordered list of per-game statistics used as node features.
struct FeatureSpec {
    std::vector<std::string> names;
    std::map<std::string, FeatureCategory> categories;
    FeatureMode mode = FeatureMode::delta;

    /// The 30-column default: objectives, farm, gold/experience, fighting, vision.
    static FeatureSpec default_spec(FeatureMode mode = FeatureMode::delta);

    /// Throws ConfigError on duplicate or uncategorized names.
    void validate() const;

    bool operator==(const FeatureSpec&) const = default;
};

FeatureSpec feature_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureSpec& spec);

/// One team's side of one game.
struct TeamGameRecord {
    std::string game_id;
    std::string league;
    int season = 0;
    std::size_t game_index_in_season = 0;
    std::string team;
    std::string opponent;
    Timestamp timestamp{};
    bool won = false;
    int kills = 0;
    int opponent_kills = 0;
    bool regular_season = true;
    /// NaN marks a missing value, imputed later by build_feature_matrix.
    std::map<std::string, double> features;

    bool operator==(const TeamGameRecord&) const = default;
};

/// Columns every match log must carry, in emission order.
const std::vector<std::string>& required_columns();

Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Sorts records by (league, season, timestamp, game_id, team) and assigns
/// game_index_in_season per league-season.
void canonicalize(std::vector<TeamGameRecord>& records);

/// Parses a match-log CSV. Throws SchemaError for missing columns, DataError
/// (carrying every row issue with its line number) for unparsable rows, and
/// PairingError for game ids that are not mirrored pairs. Returned records are
/// canonicalized.
std::vector<TeamGameRecord> parse_match_csv(std::istream& in, const FeatureSpec& spec);
std::vector<TeamGameRecord> parse_match_csv(std::string_view text, const FeatureSpec& spec);

/// Throws PairingError listing every game id that violates the pairing rules.
void validate_pairs(const std::vector<TeamGameRecord>& records);

/// Regular-season records of one league and season, chronological. An unknown
/// league yields an empty list and a warning.
std::vector<TeamGameRecord> filter_regular_season(const std::vector<TeamGameRecord>& records,
                                                  std::string_view league, int season,
                                                  std::vector<std::string>* warnings = nullptr);

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool operator==(const ColumnStats&) const = default;
};

struct QualityReport {
    std::size_t rows = 0;
    std::map<std::string, std::size_t> imputed;  // column -> count
    std::size_t total_imputed = 0;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const QualityReport& report);

struct RowKey {
    std::string team;
    std::string game_id;
    bool operator==(const RowKey&) const = default;
};

struct FeatureMatrix {
    std::vector<RowKey> row_keys;
    FeatureSpec spec;
    Matrix values;
    /// Per-column means of observed raw values, used for imputation.
    std::vector<double> impute_means;
    std::optional<ColumnStats> stats;
    QualityReport quality;
};

/// Feature rows ordered by (league, timestamp, game_id, team). Missing raw
/// values are imputed with `impute_means` when given, otherwise with the
/// column mean of the input. Delta mode subtracts the opponent's (imputed)
/// value, so paired rows are exact negations.
FeatureMatrix build_feature_matrix(const std::vector<TeamGameRecord>& records,
                                   const FeatureSpec& spec,
                                   const std::vector<double>* impute_means = nullptr);

/// Z-scores every column with population statistics. When `stats` is absent
/// they are computed from the input; zero-variance columns get scale 1 and a
/// warning.
FeatureMatrix standardize(const FeatureMatrix& matrix,
                          const std::optional<ColumnStats>& stats = std::nullopt,
                          std::vector<std::string>* warnings = nullptr);

/// Writes the feature matrix as CSV: team, gameid, then one column per feature.
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);

}  // namespace gcnwp
