#include "gcnwp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csv.hpp"
#include "gcnwp/error.hpp"

namespace gcnwp {

namespace {

constexpr std::string_view kCategoryNames[] = {"objectives", "farm", "gold_experience", "fighting",
                                               "vision"};

bool is_missing_token(std::string_view s) {
    s = csv::trim(s);
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

std::optional<bool> parse_flag(std::string_view s) {
    s = csv::trim(s);
    if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
    if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
    return std::nullopt;
}

bool chronological_less(const TeamGameRecord& a, const TeamGameRecord& b) {
    return std::tie(a.league, a.timestamp, a.game_id, a.team) <
           std::tie(b.league, b.timestamp, b.game_id, b.team);
}

}  // namespace

std::string_view to_string(FeatureCategory c) { return kCategoryNames[static_cast<int>(c)]; }

std::string_view to_string(FeatureMode m) { return m == FeatureMode::raw ? "raw" : "delta"; }

FeatureCategory parse_category(std::string_view s) {
    for (int i = 0; i < 5; ++i)
        if (kCategoryNames[i] == s) return static_cast<FeatureCategory>(i);
    throw ConfigError("unknown feature category '" + std::string(s) + "'");
}

FeatureMode parse_mode(std::string_view s) {
    if (s == "raw") return FeatureMode::raw;
    if (s == "delta") return FeatureMode::delta;
    throw ConfigError("unknown feature mode '" + std::string(s) + "' (expected raw|delta)");
}

FeatureSpec FeatureSpec::default_spec(FeatureMode mode) {
    using C = FeatureCategory;
    static const std::vector<std::pair<std::string, C>> columns = {
        {"towers", C::objectives},
        {"inhibitors", C::objectives},
        {"dragons", C::objectives},
        {"barons", C::objectives},
        {"heralds", C::objectives},
        {"first_tower", C::objectives},
        {"first_dragon", C::objectives},
        {"first_baron", C::objectives},
        {"total_cs", C::farm},
        {"jungle_cs", C::farm},
        {"cs_per_min", C::farm},
        {"total_gold", C::gold_experience},
        {"gold_per_min", C::gold_experience},
        {"gold_diff_at_10", C::gold_experience},
        {"gold_diff_at_15", C::gold_experience},
        {"xp_diff_at_10", C::gold_experience},
        {"kills", C::fighting},
        {"deaths", C::fighting},
        {"assists", C::fighting},
        {"double_kills", C::fighting},
        {"triple_kills", C::fighting},
        {"quadra_kills", C::fighting},
        {"penta_kills", C::fighting},
        {"first_blood", C::fighting},
        {"kills_per_min", C::fighting},
        {"wards_placed", C::vision},
        {"wards_killed", C::vision},
        {"control_wards", C::vision},
        {"vision_score", C::vision},
        {"vision_score_per_min", C::vision},
    };
    FeatureSpec spec;
    spec.mode = mode;
    for (const auto& [name, cat] : columns) {
        spec.names.push_back(name);
        spec.categories.emplace(name, cat);
    }
    return spec;
}

void FeatureSpec::validate() const {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty()) throw ConfigError("feature spec: empty feature name");
        if (!seen.insert(n).second) throw ConfigError("feature spec: duplicate feature '" + n + "'");
        if (!categories.contains(n))
            throw ConfigError("feature spec: feature '" + n + "' has no category");
    }
}

FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
    FeatureSpec spec = FeatureSpec::default_spec();
    try {
        if (j.contains("features")) {
            spec.names.clear();
            spec.categories.clear();
            for (const auto& f : j.at("features")) {
                const auto name = f.at("name").get<std::string>();
                spec.names.push_back(name);
                spec.categories[name] = parse_category(f.at("category").get<std::string>());
            }
        }
        if (j.contains("mode")) spec.mode = parse_mode(j.at("mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("feature spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

nlohmann::json to_json(const FeatureSpec& spec) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& n : spec.names)
        features.push_back({{"name", n}, {"category", to_string(spec.categories.at(n))}});
    return {{"mode", to_string(spec.mode)}, {"features", features}};
}

const std::vector<std::string>& required_columns() {
    static const std::vector<std::string> cols = {"gameid", "league", "season",
                                                  "date",   "team",   "opponent",
                                                  "result", "kills",  "opponent_kills"};
    return cols;
}

Timestamp parse_timestamp(std::string_view text) {
    text = csv::trim(text);
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    auto num = [&](std::size_t pos, std::size_t len) -> int {
        if (pos + len > text.size()) throw DataError("bad timestamp '" + std::string(text) + "'");
        auto v = csv::parse_int(text.substr(pos, len));
        if (!v) throw DataError("bad timestamp '" + std::string(text) + "'");
        return static_cast<int>(*v);
    };
    if (text.size() < 10 || text[4] != '-' || text[7] != '-')
        throw DataError("bad timestamp '" + std::string(text) + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) throw DataError("bad calendar date '" + std::string(text) + "'");
    int h = 0, m = 0, s = 0;
    if (text.size() > 10) {
        if ((text[10] != ' ' && text[10] != 'T') || text.size() < 16 || text[13] != ':')
            throw DataError("bad timestamp '" + std::string(text) + "'");
        h = num(11, 2);
        m = num(14, 2);
        if (text.size() >= 19) {
            if (text[16] != ':') throw DataError("bad timestamp '" + std::string(text) + "'");
            s = num(17, 2);
        }
        if (h > 23 || m > 59 || s > 60) throw DataError("bad time of day '" + std::string(text) + "'");
    }
    return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{m} +
           std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
    const auto days = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::year_month_day ymd{days};
    const std::chrono::hh_mm_ss hms{ts - days};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

void canonicalize(std::vector<TeamGameRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.league, a.season, a.timestamp, a.game_id, a.team) <
               std::tie(b.league, b.season, b.timestamp, b.game_id, b.team);
    });
    std::size_t index = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0) {
            const auto& prev = records[i - 1];
            const auto& cur = records[i];
            if (prev.league != cur.league || prev.season != cur.season) {
                index = 0;
            } else if (prev.game_id != cur.game_id) {
                ++index;
            }
        }
        records[i].game_index_in_season = index;
    }
}

void validate_pairs(const std::vector<TeamGameRecord>& records) {
    std::unordered_map<std::string, std::vector<std::size_t>> by_game;
    for (std::size_t i = 0; i < records.size(); ++i) by_game[records[i].game_id].push_back(i);

    std::vector<std::string> bad;
    for (const auto& [id, idx] : by_game) {
        if (idx.size() != 2) {
            bad.push_back(id);
            continue;
        }
        const auto& a = records[idx[0]];
        const auto& b = records[idx[1]];
        const bool ok = a.team != a.opponent && a.team == b.opponent && a.opponent == b.team &&
                        a.won != b.won && a.kills == b.opponent_kills &&
                        a.opponent_kills == b.kills && a.league == b.league &&
                        a.season == b.season && a.timestamp == b.timestamp;
        if (!ok) bad.push_back(id);
    }
    if (bad.empty()) return;
    std::sort(bad.begin(), bad.end());
    std::string msg = "unpaired or inconsistent game ids:";
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg += " " + bad[i];
    if (bad.size() > 20) msg += " ... (" + std::to_string(bad.size()) + " total)";
    throw PairingError(msg, std::move(bad));
}

std::vector<TeamGameRecord> parse_match_csv(std::istream& in, const FeatureSpec& spec) {
    spec.validate();
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty input: missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = csv::split_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col.emplace(std::string(csv::trim(header[i])), i);

    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw SchemaError("missing required column '" + name + "'");
        return it->second;
    };
    const std::size_t c_game = require("gameid");
    const std::size_t c_league = require("league");
    const std::size_t c_season = require("season");
    const std::size_t c_date = require("date");
    const std::size_t c_team = require("team");
    const std::size_t c_opp = require("opponent");
    const std::size_t c_result = require("result");
    const std::size_t c_kills = require("kills");
    const std::size_t c_okills = require("opponent_kills");
    std::vector<std::size_t> c_features;
    for (const auto& name : spec.names) c_features.push_back(require(name));
    std::optional<std::size_t> c_regular;
    bool regular_is_playoffs = false;
    if (auto it = col.find("is_regular_season"); it != col.end()) {
        c_regular = it->second;
    } else if (auto jt = col.find("playoffs"); jt != col.end()) {
        c_regular = jt->second;
        regular_is_playoffs = true;
    }

    std::vector<TeamGameRecord> records;
    std::vector<RowIssue> issues;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            issues.push_back({line_no, "",
                              "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size())});
            continue;
        }
        const std::size_t issues_before = issues.size();
        auto text = [&](std::size_t c, const char* name) {
            auto v = std::string(csv::trim(fields[c]));
            if (v.empty()) issues.push_back({line_no, name, "empty value"});
            return v;
        };
        auto integer = [&](std::size_t c, const char* name, long long lo, long long hi) {
            auto v = csv::parse_int(fields[c]);
            if (!v || *v < lo || *v > hi) {
                issues.push_back({line_no, name, "invalid integer '" + fields[c] + "'"});
                return 0LL;
            }
            return *v;
        };

        TeamGameRecord r;
        r.game_id = text(c_game, "gameid");
        r.league = text(c_league, "league");
        r.team = text(c_team, "team");
        r.opponent = text(c_opp, "opponent");
        r.season = static_cast<int>(integer(c_season, "season", 0, 9999));
        r.won = integer(c_result, "result", 0, 1) == 1;
        r.kills = static_cast<int>(integer(c_kills, "kills", 0, 1'000'000));
        r.opponent_kills = static_cast<int>(integer(c_okills, "opponent_kills", 0, 1'000'000));
        try {
            r.timestamp = parse_timestamp(fields[c_date]);
        } catch (const DataError& e) {
            issues.push_back({line_no, "date", e.what()});
        }
        if (c_regular) {
            auto flag = parse_flag(fields[*c_regular]);
            if (!flag && !is_missing_token(fields[*c_regular])) {
                issues.push_back({line_no, header[*c_regular], "invalid flag '" + fields[*c_regular] + "'"});
            } else if (flag) {
                r.regular_season = regular_is_playoffs ? !*flag : *flag;
            }
        }
        for (std::size_t f = 0; f < spec.names.size(); ++f) {
            const auto& cell = fields[c_features[f]];
            if (is_missing_token(cell)) {
                r.features[spec.names[f]] = std::nan("");
                continue;
            }
            auto v = csv::parse_double(cell);
            if (!v || !std::isfinite(*v)) {
                issues.push_back({line_no, spec.names[f], "invalid number '" + cell + "'"});
                continue;
            }
            r.features[spec.names[f]] = *v;
        }
        if (issues.size() == issues_before) records.push_back(std::move(r));
    }

    if (!issues.empty()) {
        const auto& first = issues.front();
        std::ostringstream msg;
        msg << issues.size() << " row issue(s); first at line " << first.line;
        if (!first.column.empty()) msg << " column '" << first.column << "'";
        msg << ": " << first.message;
        throw DataError(msg.str(), std::move(issues));
    }
    validate_pairs(records);
    canonicalize(records);
    return records;
}

std::vector<TeamGameRecord> parse_match_csv(std::string_view text, const FeatureSpec& spec) {
    std::istringstream in{std::string(text)};
    return parse_match_csv(in, spec);
}

std::vector<TeamGameRecord> filter_regular_season(const std::vector<TeamGameRecord>& records,
                                                  std::string_view league, int season,
                                                  std::vector<std::string>* warnings) {
    std::vector<TeamGameRecord> out;
    bool league_seen = false;
    for (const auto& r : records) {
        if (r.league != league) continue;
        league_seen = true;
        if (r.season == season && r.regular_season) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), chronological_less);
    if (warnings) {
        if (!league_seen)
            warnings->push_back("unknown league '" + std::string(league) + "'");
        else if (out.empty())
            warnings->push_back("no regular-season games for " + std::string(league) + " " +
                                std::to_string(season));
    }
    return out;
}

nlohmann::json to_json(const QualityReport& report) {
    return {{"rows", report.rows},
            {"imputed", report.imputed},
            {"total_imputed", report.total_imputed},
            {"warnings", report.warnings}};
}

FeatureMatrix build_feature_matrix(const std::vector<TeamGameRecord>& records,
                                   const FeatureSpec& spec,
                                   const std::vector<double>* impute_means) {
    spec.validate();
    std::vector<const TeamGameRecord*> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto* a, const auto* b) { return chronological_less(*a, *b); });

    const std::size_t n = rows.size();
    const std::size_t d = spec.names.size();
    if (impute_means && impute_means->size() != d)
        throw ContractError("build_feature_matrix: imputation means do not match feature count");

    FeatureMatrix fm;
    fm.spec = spec;
    fm.quality.rows = n;
    Matrix raw(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        fm.row_keys.push_back({rows[i]->team, rows[i]->game_id});
        for (std::size_t f = 0; f < d; ++f) {
            auto it = rows[i]->features.find(spec.names[f]);
            raw(i, f) = it == rows[i]->features.end() ? std::nan("") : it->second;
        }
    }

    fm.impute_means.assign(d, 0.0);
    for (std::size_t f = 0; f < d; ++f) {
        if (impute_means) {
            fm.impute_means[f] = (*impute_means)[f];
            continue;
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isnan(raw(i, f))) {
                sum += raw(i, f);
                ++count;
            }
        if (count == 0 && n > 0)
            fm.quality.warnings.push_back("column '" + spec.names[f] +
                                          "' has no observed values; imputed with 0");
        fm.impute_means[f] = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }
    for (std::size_t f = 0; f < d; ++f) {
        std::size_t filled = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::isnan(raw(i, f))) {
                raw(i, f) = fm.impute_means[f];
                ++filled;
            }
        if (filled > 0) {
            fm.quality.imputed[spec.names[f]] = filled;
            fm.quality.total_imputed += filled;
        }
    }

    if (spec.mode == FeatureMode::raw) {
        fm.values = std::move(raw);
        return fm;
    }

    std::unordered_map<std::string, std::vector<std::size_t>> by_game;
    for (std::size_t i = 0; i < n; ++i) by_game[rows[i]->game_id].push_back(i);
    fm.values = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pair = by_game[rows[i]->game_id];
        if (pair.size() != 2)
            throw ContractError("build_feature_matrix: delta mode needs both sides of game " +
                                rows[i]->game_id);
        const std::size_t j = pair[0] == i ? pair[1] : pair[0];
        for (std::size_t f = 0; f < d; ++f) fm.values(i, f) = raw(i, f) - raw(j, f);
    }
    return fm;
}

FeatureMatrix standardize(const FeatureMatrix& matrix, const std::optional<ColumnStats>& stats,
                          std::vector<std::string>* warnings) {
    const std::size_t n = matrix.values.rows();
    const std::size_t d = matrix.values.cols();
    ColumnStats s;
    if (stats) {
        if (stats->mean.size() != d || stats->stddev.size() != d)
            throw ContractError("standardize: statistics do not match column count");
        s = *stats;
    } else {
        s.mean.assign(d, 0.0);
        s.stddev.assign(d, 1.0);
        for (std::size_t f = 0; f < d; ++f) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += matrix.values(i, f);
            const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dv = matrix.values(i, f) - mean;
                sq += dv * dv;
            }
            double sd = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
            if (sd <= 1e-12 * (1.0 + std::abs(mean))) {
                sd = 1.0;
                if (warnings)
                    warnings->push_back("zero-variance column '" +
                                        (f < matrix.spec.names.size() ? matrix.spec.names[f]
                                                                      : std::to_string(f)) +
                                        "'; scale set to 1");
            }
            s.mean[f] = mean;
            s.stddev[f] = sd;
        }
    }
    FeatureMatrix out = matrix;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < d; ++f)
            out.values(i, f) = (matrix.values(i, f) - s.mean[f]) / s.stddev[f];
    out.stats = std::move(s);
    return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
    out << "team,gameid";
    for (const auto& n : matrix.spec.names) out << ',' << csv::escape(n);
    out << '\n';
    for (std::size_t i = 0; i < matrix.values.rows(); ++i) {
        out << csv::escape(matrix.row_keys[i].team) << ',' << csv::escape(matrix.row_keys[i].game_id);
        for (std::size_t f = 0; f < matrix.values.cols(); ++f)
            out << ',' << csv::format_double(matrix.values(i, f));
        out << '\n';
    }
}

}  // namespace gcnwp
