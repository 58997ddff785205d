#pragma once

// Config-driven runs and convergence studies with their file output.

#include "mdflow/config.hpp"

#include <iosfwd>
#include <optional>

namespace mdflow {

enum class StudyMode { Run, Study };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitInvalidStudy = 3;

struct StudyResult {
    int exit_code = kExitOk;
    std::string directory;
    std::vector<std::string> files;  // written, in order
    std::optional<ErrorReport> report;
};

/// MDFLOW_OUTPUT_DIR when set, else output.directory.
std::string output_directory(const RunConfig& config);

/// Run: one trajectory per tau, diagnostics.csv, and errors.csv when the
/// forcing is manufactured. Study: the convergence study of the manufactured
/// case with the spatial guard; an invalid report exits with
/// kExitInvalidStudy. Solver and geometry failures exit with kExitSolver.
StudyResult run_study(const StudyConfig& config, StudyMode mode, std::ostream& log);

/// Size of the reference mesh and the discrete spaces.
std::string mesh_info(const StudyConfig& config);

}  // namespace mdflow
