#pragma once

// CSV tables and legacy VTK files. Numbers are written with %.17g so that a
// file read back reproduces the doubles exactly.

#include "mdflow/verification.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mdflow {

std::string format_exact(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws InvalidArgument if absent.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// tau,l2_error,h1_error,order_l2,order_h1,runtime_s. The order columns of a
/// row hold the fit against the previous (larger) tau and are empty on the
/// first row. Runtimes are 0 when `timing` is false.
CsvTable errors_table(const ErrorReport& report, bool timing);

/// tau,step,t,iterations,residual,divergence,kinetic_energy, one row per step.
struct DiagnosticsBlock {
    double tau = 0.0;
    std::vector<StepDiagnostics> steps;
};
CsvTable diagnostics_table(const std::vector<DiagnosticsBlock>& blocks);

/// ASCII unstructured grid of the moved vertices (z = 0) with linear
/// triangles. Velocity and pressure are written as point data when given;
/// only vertex dofs of the quadratic velocity are used.
void write_vtk(const std::string& path, const MovedMesh& mesh, const DofMaps& dofs,
               const FEFunction* velocity = nullptr, const FEFunction* pressure = nullptr);

struct VtkData {
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> cells;
    std::vector<Vec2> velocity;   // empty when absent
    std::vector<double> pressure; // empty when absent
};

/// Reads files written by write_vtk.
VtkData read_vtk(const std::string& path);

}  // namespace mdflow
