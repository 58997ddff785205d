#pragma once

// Implicit ALE update on the moving mesh. One step from t_n to t_{n+1}:
//
//   (M_{n+1} + tau K + tau C) u - tau B^T p = M_n u^n + tau F(t_{n+1}),
//   B u = 0,  mean(p) = 0,  u = 0 on the boundary,
//
// where M_n is the mass matrix on the mesh at t_n applied to the same dof
// vector, C the convection matrix of V - w at t_{n+1}, and the zero mean of p
// is imposed by a scalar Lagrange multiplier.

#include "mdflow/assembly.hpp"

#include <Eigen/UmfPackSupport>

#include <string>

namespace mdflow {

struct OutputOptions {
    std::string directory = "output";
    bool csv = true;
    int vtk_stride = 0;  // 0: no VTK output
    bool timing = true;  // false: runtime columns are written as 0
};

struct RunConfig {
    std::shared_ptr<const VelocityField> flow;       // w
    std::shared_ptr<const VelocityField> advection;  // V; the same object as flow means V = w
    TimeField forcing;                               // empty: f = 0
    std::string forcing_name = "zero";
    PointwiseField initial;                          // empty value: u_0 = 0
    double holdall_radius = kDefaultHoldAllRadius;
    double h = 0.1;
    double tau = 0.1;
    double T = 1.0;
    int substeps = 10;  // flow-map RK4 steps per time step
    double tolerance = 1e-10;
    int max_iterations = 20;
    bool skew_convection = false;
    double reaction = 0.0;  // porous-medium coefficient c in c u
    bool keep_states = true;
    OutputOptions output;

    bool advection_equals_flow() const { return !advection || advection == flow; }
    int num_steps() const;
    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

// --- saddle-point solves --------------------------------------------------------

struct SaddleSolution {
    Vector u;
    Vector p;
    double multiplier = 0.0;
    int iterations = 0;
    double residual = 0.0;  // relative residual of the full block system
    std::vector<double> history;
};

/// Sparse LU (UMFPACK) with iterative refinement on the full block system
/// until the relative residual is <= tol.
///
/// With a mean row the dense multiplier row and column would ruin the fill of
/// the factorization. Constant pressures span the kernel of the remaining
/// blocks once Dirichlet conditions are applied, so the multiplier and the
/// constant shift are recovered in closed form around a factorization with
/// one pressure dof pinned. If refinement stalls (the kernel assumption does
/// not hold) the bordered matrix is factorized directly.
///
/// The symbolic analysis is reused while the sparsity pattern does not
/// change. Throws SolverError with the residual history when the target is
/// not reached within max_iterations refinement sweeps.
class SaddleSolver {
public:
    SaddleSolution solve(const SaddleSystem& system, double tol, int max_iterations = 20);

private:
    struct Factor {
        SparseMatrix matrix;  // UMFPACK solves read the factored matrix
        Eigen::UmfPackLU<SparseMatrix> lu;
        std::vector<int> outer, inner;
        void factorize(SparseMatrix k);
    };
    Factor pinned_;
    Factor full_;
};

SaddleSolution solve_saddle(const SaddleSystem& system, double tol, int max_iterations = 20);

/// The assembled block matrix [A B^T 0; B 0 m; 0 m^T 0].
SparseMatrix block_matrix(const SaddleSystem& system);

// --- stepping -----------------------------------------------------------------

struct StepState {
    int index = 0;
    double t = 0.0;
    std::shared_ptr<const MovedMesh> mesh;
    FEFunction u;
    FEFunction p;
};

struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double divergence = 0.0;  // max |B u|
    double kinetic_energy = 0.0;
};

class TimeStepper {
public:
    explicit TimeStepper(RunConfig config);
    TimeStepper(RunConfig config, std::shared_ptr<const Mesh> reference);

    const RunConfig& config() const { return config_; }
    const DofMaps& dofs() const { return dofs_; }
    std::shared_ptr<const Mesh> reference_mesh() const { return reference_; }

    /// Interpolant of u_0 on the reference mesh with zero boundary dofs.
    /// Rejects initial data whose divergence is not zero.
    StepState initialize() const;
    StepState step(const StepState& state, StepDiagnostics* diagnostics = nullptr);

private:
    RunConfig config_;
    std::shared_ptr<const Mesh> reference_;
    DofMaps dofs_;
    SaddleSolver solver_;
};

struct Trajectory {
    RunConfig config;
    DofMaps dofs;
    std::vector<StepState> states;  // all steps, or first and last only
    std::vector<StepDiagnostics> diagnostics;

    const StepState& final_state() const { return states.back(); }
};

Trajectory run(const RunConfig& config);
Trajectory run(const RunConfig& config, std::shared_ptr<const Mesh> reference);

/// phi_t((1 - theta) phi_{-t_n} u^n + theta phi_{-t_{n+1}} u^{n+1}), the
/// Piola-consistent blend of two consecutive states, as a field on Omega(t).
/// Needs a trajectory with all states kept.
PointwiseField interpolate_state(const Trajectory& trajectory, double t);

/// The coordinate blend (1 - theta) u^n o Phi_n o Phi_t^{-1}
/// + theta u^{n+1} o Phi_{n+1} o Phi_t^{-1}, for comparison.
PointwiseField interpolate_naive(const Trajectory& trajectory, double t);

}  // namespace mdflow
