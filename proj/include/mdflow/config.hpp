#pragma once

// Sectioned key-value configuration files.
//
//   # comment
//   [section]
//   key = value            # trailing comments are allowed
//
// Keys are unique within a section; unknown sections and keys are errors.
// Lists are whitespace-separated. Booleans are true/false. The full grammar
// with defaults is documented in README.md.

#include "mdflow/verification.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mdflow {

struct StudyConfig {
    RunConfig run;                 // run.tau is the largest entry of taus
    std::vector<double> taus;      // decreasing
    std::optional<ManufacturedCase> manufactured;
    /// Effective value of every key, "section.key" -> text.
    std::map<std::string, std::string> effective;
    /// Keys that were not given and took their default.
    std::vector<std::string> defaulted;
};

/// Parses and validates. Errors name the offending key ("time.tau: ...") or
/// the line for syntax errors.
StudyConfig parse_config_text(const std::string& text);
StudyConfig parse_config(const std::string& path);

/// One "section.key = value" line per key, defaults marked.
std::string describe(const StudyConfig& config);

}  // namespace mdflow
