#pragma once

// Manufactured solutions, error norms, order fits and brute-force oracles.

#include "mdflow/timestepper.hpp"

#include <functional>
#include <string>

namespace mdflow {

// --- manufactured solutions ------------------------------------------------------

/// An exact solution of the Oseen problem on the moving disk, with the
/// forcing that makes it one.
struct ManufacturedCase {
    std::string description;
    std::shared_ptr<const VelocityField> flow;       // w
    std::shared_ptr<const VelocityField> advection;  // V (same object as flow when V = w)
    double holdall_radius = kDefaultHoldAllRadius;

    std::function<Vec2(double, const Vec2&)> velocity;
    std::function<Mat2(double, const Vec2&)> velocity_jacobian;  // (Du)_{ij} = d_j u_i
    std::function<Vec2(double, const Vec2&)> velocity_dt;
    std::function<Vec2(double, const Vec2&)> velocity_laplacian;
    std::function<double(double, const Vec2&)> pressure;
    std::function<Vec2(double, const Vec2&)> pressure_gradient;
    /// f = du/dt + (V . grad) u - Laplace u + grad p.
    TimeField forcing;

    /// u_ex(t, .) with its Jacobian.
    PointwiseField exact(double t) const;
    /// A run of this case: u_0 = u_ex(0), f as above.
    RunConfig run_config(double h, double tau, double T) const;
};

/// w = rigid rotation with rate omega and u_ex(t) = phi_t u_0, where u_0 is the
/// perpendicular gradient of `bump` and phi_t is the Piola push-forward. For a
/// rotation phi_t u_0 (x) = R(omega t) u_0(R(-omega t) x), so every derivative
/// is closed-form. p_ex = cos(t) x1 / 2 + sin(t) x2 / 4 has zero mean on any
/// centrally symmetric domain and lies in the discrete pressure space, so it
/// adds no spatial error of its own.
///
/// `advection` defaults to V = w. The bump must lie in the closed unit disk;
/// a support reaching the hold-all is rejected as well.
ManufacturedCase make_rotation_case(double omega, const BumpStream& bump,
                                    std::shared_ptr<const VelocityField> advection = nullptr,
                                    double holdall_radius = kDefaultHoldAllRadius);

/// Default bump of the rotation cases: psi = (1 - |x|^2)^3 on the unit disk.
/// Its velocity is a quintic polynomial that vanishes to second order on the
/// circle, so the polygonal boundary adds little spatial error.
BumpStream default_case_bump();
/// Fast enough that at h = 0.04 the time error dominates in both norms.
inline constexpr double kDefaultCaseOmega = 5.5;

/// The V != w companion: V = w + a bump stream field of amplitude 0.5.
std::shared_ptr<const VelocityField> default_cross_advection(double omega);

// --- error norms -----------------------------------------------------------------

struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0;  // H1 seminorm
};

/// Quadrature norms of uh - exact and of its gradient on the moved mesh.
/// Without a Jacobian on `exact` the seminorm is computed with central
/// differences (step 1e-6).
ErrorNorms error_norms(const MovedMesh& mesh, const DofMaps& dofs, const FEFunction& uh,
                       const PointwiseField& exact);

// --- convergence studies -------------------------------------------------------------

struct ErrorRow {
    double tau = 0.0;
    double l2 = 0.0;
    double h1 = 0.0;
    double runtime_s = 0.0;
};

/// Spatial part of the error at T. `fine` and `coarse` are interpolation errors
/// of u_ex(T) at h and 2h. `scheme_coarse` is the scheme error of the smallest
/// tau rerun at 2h; with e(2h)^2 - e(h)^2 ~ (4^k - 1) s(h)^2 it gives a second
/// estimate of s(h). `estimate` is the larger of the two.
struct SpatialProbe {
    ErrorNorms fine;
    ErrorNorms coarse;
    ErrorNorms scheme_coarse;
    ErrorNorms estimate;
};

struct ErrorReport {
    std::vector<ErrorRow> rows;  // decreasing tau
    std::vector<double> order_l2;
    std::vector<double> order_h1;
    double h = 0.0;
    double T = 0.0;
    SpatialProbe probe;
    bool valid = true;
    std::string note;
    std::vector<std::vector<StepDiagnostics>> diagnostics;  // per row
};

/// log(e_i / e_{i+1}) / log(tau_i / tau_{i+1}) for consecutive entries.
std::vector<double> fit_orders(const std::vector<double>& taus, const std::vector<double>& errors);

/// Sorts rows by decreasing tau and fills in the fitted orders.
ErrorReport make_report(std::vector<ErrorRow> rows);

struct StudyOptions {
    int substeps = 10;
    double tolerance = 1e-10;
    int max_iterations = 20;
    bool skew_convection = false;
    bool timing = true;
    /// The probe's spatial error must stay below this fraction of the
    /// smallest measured error, in both norms.
    double spatial_fraction = 0.1;
    /// Called with every finished run (VTK output, diagnostics).
    std::function<void(const Trajectory&)> on_run;
};

/// Interpolation part of the probe only.
SpatialProbe interpolation_probe(const ManufacturedCase& mcase, double h, double T);

/// Runs the case once per tau at fixed h and fits orders between rows. The
/// smallest tau is rerun at 2h for the spatial probe. The report is flagged
/// invalid when the estimated spatial error is not small against the smallest
/// error or the interpolation error does not decrease under refinement.
ErrorReport convergence_study(const ManufacturedCase& mcase, std::vector<double> taus, double h,
                              double T, const StudyOptions& options = {});

// --- transport and appendix identities --------------------------------------------

/// |d/dt int (phi_t u0).(phi_t v0) - int (phi_t u0).M(t)(phi_t v0)| over the
/// moved mesh, the derivative taken by central differences with step fd_step
/// and M the transport kernel.
double transport_identity_residual(const FlowMap& flow, const PointwiseField& u0,
                                   const PointwiseField& v0, double t, double fd_step,
                                   std::shared_ptr<const Mesh> mesh);

struct AppendixOptions {
    double divergence_step = 2e-5;
    double divergence_tolerance = 1e-5;
    double jacobi_step = 1e-4;
    double jacobi_tolerance = 1e-6;
    /// Relative slack below -slack_tolerance counts as a violated bound.
    double slack_tolerance = 1e-12;
    /// Mesh size and flow-map step of the norm integrals.
    double norm_h = 0.1;
    double norm_max_dt = 1e-2;
};

struct AppendixReport {
    double max_divergence = 0.0;   // push and pull of divergence-free bumps
    double min_norm_slack = 0.0;   // smallest (bound - norm^2) / bound
    double push_norm_ratio = 1.0;  // ||phi_t u|| / ||u||
    double max_jacobi = 0.0;       // sum_{i,k} (DPhi^{-1})_{ki} d_k (DPhi)_{ij}
    bool passed = true;
    std::vector<std::string> failures;
};

/// (a) divergence of pushed and pulled fields at the sample points, (b) the
/// Piola norm bounds in ||DPhi||, ||DPhi^{-1}||, ||D^2 Phi|| (constant 2 from
/// (a+b)^2 <= 2a^2 + 2b^2), (c) the Jacobi-formula cancellation. Sample points
/// are reference points well inside the unit disk.
AppendixReport appendix_identity_suite(const VelocityField& field, double t,
                                       std::span<const Vec2> points,
                                       const AppendixOptions& options = {});

// --- property suite --------------------------------------------------------------------

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// The quick property checks behind `mdflow verify`.
std::vector<PropertyResult> run_property_suite();

}  // namespace mdflow
