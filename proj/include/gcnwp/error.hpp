#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gcnwp {

/// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is missing a required column or has an unusable header.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Game ids that do not appear exactly twice with mirrored sides.
class PairingError : public Error {
public:
    PairingError(const std::string& what, std::vector<std::string> game_ids)
        : Error(what), game_ids_(std::move(game_ids)) {}
    const std::vector<std::string>& game_ids() const noexcept { return game_ids_; }

private:
    std::vector<std::string> game_ids_;
};

struct RowIssue {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string column;
    std::string message;
};

/// One or more rows could not be parsed; carries the full row report.
class DataError : public Error {
public:
    DataError(const std::string& what, std::vector<RowIssue> issues = {})
        : Error(what), issues_(std::move(issues)) {}
    const std::vector<RowIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<RowIssue> issues_;
};

/// Shapes or preconditions violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace gcnwp
