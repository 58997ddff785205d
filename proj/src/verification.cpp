#include "mdflow/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mdflow {

namespace {

Mat2 rotation(double theta) {
    Mat2 r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

const Mat2& quarter_turn() {
    static const Mat2 j = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();
    return j;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace

// --- manufactured solutions ------------------------------------------------------

PointwiseField ManufacturedCase::exact(double t) const {
    auto u = velocity;
    auto du = velocity_jacobian;
    return make_pointwise([u, t](const Vec2& x) { return u(t, x); },
                          [du, t](const Vec2& x) { return du(t, x); }, t);
}

RunConfig ManufacturedCase::run_config(double h, double tau, double T) const {
    RunConfig c;
    c.flow = flow;
    c.advection = advection ? advection : flow;
    c.forcing = forcing;
    c.forcing_name = "manufactured:" + description;
    c.initial = exact(0.0);
    c.holdall_radius = holdall_radius;
    c.h = h;
    c.tau = tau;
    c.T = T;
    return c;
}

BumpStream default_case_bump() { return BumpStream{Vec2::Zero(), 1.0, 1.0, 3}; }

std::shared_ptr<const VelocityField> default_cross_advection(double omega) {
    FieldParameters rot;
    rot.omega = omega;
    FieldParameters bump;
    bump.bump = BumpStream{Vec2(-0.2, 0.1), 0.7, 0.5, 4};
    return std::make_shared<const VelocityField>(make_composite(
        {make_field(FieldKind::RigidRotation, rot), make_field(FieldKind::StreamBump, bump)}));
}

ManufacturedCase make_rotation_case(double omega, const BumpStream& bump,
                                    std::shared_ptr<const VelocityField> advection,
                                    double holdall_radius) {
    if (!std::isfinite(omega)) throw InvalidArgument("rotation rate must be finite");
    if (!(bump.radius > 0.0) || !std::isfinite(bump.radius) || !bump.center.allFinite()) {
        throw InvalidArgument("bump centre and radius must be finite, radius positive");
    }
    if (bump.exponent < 2) throw InvalidArgument("bump exponent must be at least 2");
    const double reach = bump.center.norm() + bump.radius;
    if (reach >= holdall_radius) {
        std::ostringstream os;
        os << "bump support reaches the hold-all disk (|c| + r = " << reach << " >= " << holdall_radius
           << ")";
        throw InvalidArgument(os.str());
    }
    if (reach > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "bump support must lie in the unit disk (|c| + r = " << reach << ")";
        throw InvalidArgument(os.str());
    }

    FieldParameters params;
    params.omega = omega;
    ManufacturedCase mc;
    mc.flow = std::make_shared<const VelocityField>(make_field(FieldKind::RigidRotation, params));
    mc.advection = advection ? std::move(advection) : mc.flow;
    mc.holdall_radius = holdall_radius;
    {
        std::ostringstream os;
        os << "rotation(omega=" << omega << ")" << (mc.advection == mc.flow ? "" : ",V!=w");
        mc.description = os.str();
    }

    const BumpStream b = bump;
    mc.velocity = [b, omega](double t, const Vec2& x) -> Vec2 {
        const Mat2 r = rotation(omega * t);
        return r * b.velocity(r.transpose() * x);
    };
    mc.velocity_jacobian = [b, omega](double t, const Vec2& x) -> Mat2 {
        const Mat2 r = rotation(omega * t);
        return r * b.velocity_jacobian(r.transpose() * x) * r.transpose();
    };
    mc.velocity_laplacian = [b, omega](double t, const Vec2& x) -> Vec2 {
        const Mat2 r = rotation(omega * t);
        return r * b.velocity_laplacian(r.transpose() * x);
    };
    // d/dt R(wt) = w J R and d/dt R(-wt) x = -w J y.
    mc.velocity_dt = [b, omega](double t, const Vec2& x) -> Vec2 {
        const Mat2 r = rotation(omega * t);
        const Vec2 y = r.transpose() * x;
        const Mat2& j = quarter_turn();
        return omega * (j * r * b.velocity(y)) - omega * (r * b.velocity_jacobian(y) * (j * y));
    };
    mc.pressure = [](double t, const Vec2& x) {
        return 0.5 * std::cos(t) * x.x() + 0.25 * std::sin(t) * x.y();
    };
    mc.pressure_gradient = [](double t, const Vec2&) {
        return Vec2(0.5 * std::cos(t), 0.25 * std::sin(t));
    };

    auto v = mc.advection;
    auto dt = mc.velocity_dt;
    auto du = mc.velocity_jacobian;
    auto lap = mc.velocity_laplacian;
    auto gp = mc.pressure_gradient;
    mc.forcing = [v, dt, du, lap, gp](double t, const Vec2& x) -> Vec2 {
        return dt(t, x) + du(t, x) * v->value(t, x) - lap(t, x) + gp(t, x);
    };
    return mc;
}

// --- error norms -----------------------------------------------------------------

ErrorNorms error_norms(const MovedMesh& mesh, const DofMaps& dofs, const FEFunction& uh,
                       const PointwiseField& exact) {
    if (uh.space != Space::Velocity
        || static_cast<std::size_t>(uh.values.size()) != dofs.num_velocity_dofs) {
        throw InvalidArgument("error_norms: uh is not a velocity on this mesh");
    }
    const auto& rule = triangle_rule();
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t tri = 0; tri < mesh.num_triangles(); ++tri) {
        const ElementGeometry geo(mesh.triangle_vertices(tri));
        const double area = std::abs(geo.area);
        for (const auto& q : rule) {
            const Vec2 x = geo.point(q.bary);
            const Vec2 e = velocity_at(dofs, uh.values, static_cast<int>(tri), q.bary) - exact.value(x);
            const Mat2 g = exact.has_jacobian() ? exact.jacobian(x) : fd_jacobian(exact.value, x, 1e-6);
            const Mat2 de =
                velocity_gradient_at(mesh, dofs, uh.values, static_cast<int>(tri), q.bary) - g;
            l2 += q.weight * area * e.squaredNorm();
            h1 += q.weight * area * de.squaredNorm();
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

// --- convergence studies -------------------------------------------------------------

std::vector<double> fit_orders(const std::vector<double>& taus, const std::vector<double>& errors) {
    if (taus.size() != errors.size()) throw InvalidArgument("fit_orders: size mismatch");
    std::vector<double> orders;
    for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
        orders.push_back(std::log(errors[i] / errors[i + 1]) / std::log(taus[i] / taus[i + 1]));
    }
    return orders;
}

ErrorReport make_report(std::vector<ErrorRow> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ErrorRow& a, const ErrorRow& b) { return a.tau > b.tau; });
    ErrorReport r;
    std::vector<double> taus, l2, h1;
    for (const auto& row : rows) {
        taus.push_back(row.tau);
        l2.push_back(row.l2);
        h1.push_back(row.h1);
    }
    r.order_l2 = fit_orders(taus, l2);
    r.order_h1 = fit_orders(taus, h1);
    r.rows = std::move(rows);
    return r;
}

SpatialProbe interpolation_probe(const ManufacturedCase& mcase, double h, double T) {
    auto interpolation_error = [&](double hh) {
        auto mesh = build_disk_mesh(hh);
        const int substeps = std::max(1, static_cast<int>(std::ceil(T / 1e-3)));
        const MovedMesh moved = move_mesh(mesh, *mcase.flow, T, substeps, mcase.holdall_radius);
        const DofMaps dofs = taylor_hood(*mesh);
        const PointwiseField ex = mcase.exact(T);
        FEFunction u = make_velocity(moved, dofs, interpolate_velocity(moved, dofs, ex.value));
        return error_norms(moved, dofs, u, ex);
    };
    SpatialProbe p;
    p.fine = interpolation_error(h);
    p.coarse = interpolation_error(2.0 * h);
    p.estimate = p.fine;
    return p;
}

namespace {

struct SingleRun {
    ErrorRow row;
    Trajectory trajectory;
};

SingleRun run_case(const ManufacturedCase& mcase, double tau, double h, double T,
                   const StudyOptions& options, std::shared_ptr<const Mesh> mesh, bool keep) {
    RunConfig cfg = mcase.run_config(h, tau, T);
    cfg.substeps = options.substeps;
    cfg.tolerance = options.tolerance;
    cfg.max_iterations = options.max_iterations;
    cfg.skew_convection = options.skew_convection;
    cfg.keep_states = keep;
    cfg.output.timing = options.timing;

    const auto start = std::chrono::steady_clock::now();
    Trajectory traj = run(cfg, std::move(mesh));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const StepState& last = traj.final_state();
    const ErrorNorms e = error_norms(*last.mesh, traj.dofs, last.u, mcase.exact(last.t));
    return {{tau, e.l2, e.h1, options.timing ? elapsed : 0.0}, std::move(traj)};
}

}  // namespace

ErrorReport convergence_study(const ManufacturedCase& mcase, std::vector<double> taus, double h,
                              double T, const StudyOptions& options) {
    if (taus.empty()) throw InvalidArgument("time.taus: at least one step size is needed");
    std::sort(taus.begin(), taus.end(), std::greater<>());
    auto mesh = build_disk_mesh(h);

    std::vector<ErrorRow> rows;
    std::vector<std::vector<StepDiagnostics>> diagnostics;
    for (double tau : taus) {
        SingleRun r = run_case(mcase, tau, h, T, options, mesh, static_cast<bool>(options.on_run));
        rows.push_back(r.row);
        diagnostics.push_back(r.trajectory.diagnostics);
        if (options.on_run) options.on_run(r.trajectory);
    }

    ErrorReport report = make_report(std::move(rows));
    report.diagnostics = std::move(diagnostics);
    report.h = h;
    report.T = T;
    report.probe = interpolation_probe(mcase, h, T);

    double min_l2 = report.rows.front().l2, min_h1 = report.rows.front().h1;
    for (const auto& row : report.rows) {
        min_l2 = std::min(min_l2, row.l2);
        min_h1 = std::min(min_h1, row.h1);
    }
    {
        const ErrorRow& last = report.rows.back();
        const ErrorRow coarse =
            run_case(mcase, last.tau, 2.0 * h, T, options, build_disk_mesh(2.0 * h), false).row;
        SpatialProbe& p = report.probe;
        p.scheme_coarse = {coarse.l2, coarse.h1};
        auto split = [](double ec, double ef, double factor) {
            return std::sqrt(std::max(0.0, ec * ec - ef * ef) / factor);
        };
        p.estimate.l2 = std::max(p.fine.l2, split(coarse.l2, last.l2, 63.0));
        p.estimate.h1 = std::max(p.fine.h1, split(coarse.h1, last.h1, 15.0));
    }
    const SpatialProbe& p = report.probe;
    std::ostringstream note;
    if (!(p.estimate.l2 < options.spatial_fraction * min_l2)) {
        note << "spatial L2 error " << format_number(p.estimate.l2) << " is not below "
             << options.spatial_fraction << " x smallest L2 error " << format_number(min_l2) << "; ";
    }
    if (!(p.estimate.h1 < options.spatial_fraction * min_h1)) {
        note << "spatial H1 error " << format_number(p.estimate.h1) << " is not below "
             << options.spatial_fraction << " x smallest H1 error " << format_number(min_h1) << "; ";
    }
    if (!(p.coarse.l2 > 2.0 * p.fine.l2)) {
        note << "spatial probe does not decrease under refinement (" << format_number(p.coarse.l2)
             << " at 2h vs " << format_number(p.fine.l2) << " at h); ";
    }
    report.note = note.str();
    report.valid = report.note.empty();
    if (!report.valid) report.note = "spatial error dominates: " + report.note;
    return report;
}

// --- transport identity ------------------------------------------------------------

namespace {

struct Quadrature {
    std::vector<Vec2> points;
    std::vector<double> weights;
};

Quadrature quadrature_of(const MovedMesh& mesh) {
    Quadrature q;
    const auto& rule = triangle_rule();
    q.points.reserve(mesh.num_triangles() * rule.size());
    for (std::size_t tri = 0; tri < mesh.num_triangles(); ++tri) {
        const ElementGeometry geo(mesh.triangle_vertices(tri));
        for (const auto& r : rule) {
            q.points.push_back(geo.point(r.bary));
            q.weights.push_back(r.weight * std::abs(geo.area));
        }
    }
    return q;
}

// int over the mesh moved to s of (phi_s u0).K(phi_s v0), K = I or the kernel.
double pushed_product(const FlowMap& flow, const PointwiseField& u0, const PointwiseField& v0,
                      double s, const std::shared_ptr<const Mesh>& mesh, bool with_kernel) {
    const MovedMesh moved = s == 0.0 ? reference_configuration(mesh)
                                     : move_mesh(mesh, flow.field(), s, flow.substeps_for(s),
                                                 flow.holdall_radius());
    const Quadrature q = quadrature_of(moved);
    const std::vector<Vec2> ys = s == 0.0 ? q.points : flow.inverse(q.points, s);
    const FlowMapSample sample = flow.sample(ys, s);
    double sum = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const Vec2 a = sample.jac[i] * u0.value(ys[i]);
        const Vec2 b = sample.jac[i] * v0.value(ys[i]);
        sum += q.weights[i]
               * (with_kernel ? a.dot(lambda_matrix(sample.jac[i], sample.jac_dt[i]) * b) : a.dot(b));
    }
    return sum;
}

}  // namespace

double transport_identity_residual(const FlowMap& flow, const PointwiseField& u0,
                                   const PointwiseField& v0, double t, double fd_step,
                                   std::shared_ptr<const Mesh> mesh) {
    if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be positive");
    if (t < fd_step) throw InvalidArgument("transport identity needs t >= fd_step");
    const double fd = (pushed_product(flow, u0, v0, t + fd_step, mesh, false)
                       - pushed_product(flow, u0, v0, t - fd_step, mesh, false))
                      / (2.0 * fd_step);
    return std::abs(fd - pushed_product(flow, u0, v0, t, mesh, true));
}

// --- appendix identities -----------------------------------------------------------

namespace {

// d_k DPhi by fourth-order central differences, from a sample laid out as
// [points, points + s e1, points - s e1, points + 2s e1, points - 2s e1, the
// same four for e2].
std::array<Mat2, 2> stencil_derivative(const FlowMapSample& s, std::size_t n, std::size_t i, double step) {
    std::array<Mat2, 2> d;
    for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t base = (1 + 4 * k) * n + i;
        d[k] = (8.0 * (s.jac[base] - s.jac[base + n]) - (s.jac[base + 2 * n] - s.jac[base + 3 * n]))
               / (12.0 * step);
    }
    return d;
}

std::vector<Vec2> with_stencil(std::span<const Vec2> points, double step) {
    std::vector<Vec2> all(points.begin(), points.end());
    for (const Vec2& e : {Vec2(1.0, 0.0), Vec2(0.0, 1.0)}) {
        for (double m : {1.0, -1.0, 2.0, -2.0}) {
            for (const Vec2& p : points) all.push_back(p + m * step * e);
        }
    }
    return all;
}

double tensor_norm(const std::array<Mat2, 2>& d) {
    return std::sqrt(d[0].squaredNorm() + d[1].squaredNorm());
}

// T[u]_{ik} = sum_j (d_k M)_{ij} u_j.
Mat2 contract(const std::array<Mat2, 2>& d, const Vec2& u) {
    Mat2 r;
    r.col(0) = d[0] * u;
    r.col(1) = d[1] * u;
    return r;
}

double spectral_norm(const Mat2& m) {
    Eigen::JacobiSVD<Mat2> svd(m);
    return svd.singularValues()(0);
}

}  // namespace

AppendixReport appendix_identity_suite(const VelocityField& field, double t,
                                       std::span<const Vec2> points, const AppendixOptions& options) {
    AppendixReport report;
    const FlowMap flow(field);

    // (a) divergence of push and pull.
    const PointwiseField u0 = bump_velocity(BumpStream{Vec2(0.1, -0.1), 0.8, 1.0, 4});
    const PointwiseField ut = bump_velocity(BumpStream{Vec2::Zero(), 0.5, 1.0, 4});
    {
        const FlowMapSample sample = flow.sample(points, t);
        const PointwiseField pushed = piola_push(flow, t, u0);
        const PointwiseField pulled = piola_pull(flow, t, ut);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dp = std::abs(fd_divergence(pushed.value, sample.phi[i], options.divergence_step));
            const double dq = std::abs(fd_divergence(pulled.value, points[i], options.divergence_step));
            report.max_divergence = std::max({report.max_divergence, dp, dq});
        }
    }

    // (c) Jacobi cancellation: tr(DPhi^{-1} d_j DPhi) = d_j log det DPhi = 0.
    {
        const FlowMapSample s = flow.sample(with_stencil(points, options.jacobi_step), t);
        const std::size_t n = points.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Mat2 inv = s.jac[i].inverse();
            const auto d = stencil_derivative(s, n, i, options.jacobi_step);
            for (int j = 0; j < 2; ++j) {
                double sum = 0.0;
                for (int ii = 0; ii < 2; ++ii) {
                    for (int k = 0; k < 2; ++k) sum += inv(k, ii) * d[k](ii, j);
                }
                report.max_jacobi = std::max(report.max_jacobi, std::abs(sum));
            }
        }
    }

    // (b) norm bounds. det DPhi = 1, so integrals over Omega(t) are taken over
    // the reference mesh in y with x = Phi_t(y).
    {
        const auto mesh = build_disk_mesh(options.norm_h);
        const Quadrature q = quadrature_of(reference_configuration(mesh));
        const double step = 1e-5;
        const FlowMap coarse(field, options.norm_max_dt);
        const FlowMapSample s = coarse.sample(with_stencil(q.points, step), t);
        const std::size_t n = q.points.size();

        double sup_j = 0.0, sup_jinv = 0.0, sup_d2 = 0.0, sup_d2inv = 0.0;
        double u_l2 = 0.0, u_h1 = 0.0, push_l2 = 0.0, push_h1 = 0.0;
        double ut_l2 = 0.0, ut_h1 = 0.0, pull_l2 = 0.0, pull_h1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = q.weights[i];
            const Vec2& y = q.points[i];
            const Vec2& x = s.phi[i];
            const Mat2& jac = s.jac[i];
            const Mat2 inv = jac.inverse();
            const auto d = stencil_derivative(s, n, i, step);
            // d_{x_l} (DPhi^{-1} o Phi^{-1}) = sum_k -K (d_k DPhi) K K_{kl}, K = DPhi^{-1}.
            std::array<Mat2, 2> dinv;
            for (int l = 0; l < 2; ++l) {
                dinv[l] = Mat2::Zero();
                for (int k = 0; k < 2; ++k) dinv[l] += -inv * d[k] * inv * inv(k, l);
            }
            sup_j = std::max(sup_j, spectral_norm(jac));
            sup_jinv = std::max(sup_jinv, spectral_norm(inv));
            sup_d2 = std::max(sup_d2, tensor_norm(d));
            sup_d2inv = std::max(sup_d2inv, tensor_norm(dinv));

            const Vec2 u = u0.value(y);
            const Mat2 du = u0.jacobian(y);
            u_l2 += w * u.squaredNorm();
            u_h1 += w * du.squaredNorm();
            push_l2 += w * (jac * u).squaredNorm();
            push_h1 += w * ((contract(d, u) + jac * du) * inv).squaredNorm();

            const Vec2 v = ut.value(x);
            const Mat2 dv = ut.jacobian(x);
            ut_l2 += w * v.squaredNorm();
            ut_h1 += w * dv.squaredNorm();
            pull_l2 += w * (inv * v).squaredNorm();
            pull_h1 += w * ((contract(dinv, v) + inv * dv) * jac).squaredNorm();
        }
        const double j2 = sup_j * sup_j, ji2 = sup_jinv * sup_jinv;
        const std::array<std::pair<double, double>, 4> bounds = {{
            {push_l2, j2 * u_l2},
            {pull_l2, ji2 * ut_l2},
            {push_h1, 2.0 * ji2 * (sup_d2 * sup_d2 * u_l2 + j2 * u_h1)},
            {pull_h1, 2.0 * j2 * (sup_d2inv * sup_d2inv * ut_l2 + ji2 * ut_h1)},
        }};
        report.min_norm_slack = std::numeric_limits<double>::infinity();
        for (const auto& [lhs, rhs] : bounds) {
            report.min_norm_slack = std::min(report.min_norm_slack, (rhs - lhs) / std::max(rhs, 1e-300));
        }
        report.push_norm_ratio = std::sqrt(push_l2 / u_l2);
    }

    if (!(report.max_divergence <= options.divergence_tolerance)) {
        report.failures.push_back("divergence " + format_number(report.max_divergence));
    }
    if (!(report.max_jacobi <= options.jacobi_tolerance)) {
        report.failures.push_back("jacobi cancellation " + format_number(report.max_jacobi));
    }
    if (!(report.min_norm_slack >= -options.slack_tolerance)) {
        report.failures.push_back("norm bound slack " + format_number(report.min_norm_slack));
    }
    report.passed = report.failures.empty();
    return report;
}

// --- property suite --------------------------------------------------------------------

namespace {

std::vector<Vec2> interior_points(std::size_t n, double radius, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> r(0.0, 1.0), a(0.0, 2.0 * M_PI);
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double rr = radius * std::sqrt(r(rng));
        const double th = a(rng);
        pts.emplace_back(rr * std::cos(th), rr * std::sin(th));
    }
    return pts;
}

std::vector<std::pair<std::string, VelocityField>> field_catalogue() {
    FieldParameters rot;
    rot.omega = 1.0;
    FieldParameters shear;
    shear.shear << 0.0, 1.0, 0.0, 0.0;
    FieldParameters bump;
    bump.bump = BumpStream{Vec2(0.1, 0.0), 0.8, 0.2, 4};
    const VelocityField b = make_field(FieldKind::StreamBump, bump);
    return {{"zero", make_field(FieldKind::Zero)},
            {"rotation", make_field(FieldKind::RigidRotation, rot)},
            {"shear", make_field(FieldKind::Shear, shear)},
            {"bump", b},
            {"composite", make_composite({make_field(FieldKind::RigidRotation, rot), b})}};
}

PropertyResult check(std::string name, double value, double tol) {
    PropertyResult r;
    r.name = std::move(name);
    r.passed = value <= tol;
    r.detail = format_number(value) + " (tol " + format_number(tol) + ")";
    return r;
}

}  // namespace

std::vector<PropertyResult> run_property_suite() {
    std::vector<PropertyResult> out;
    auto guarded = [&](const std::string& name, const std::function<PropertyResult()>& body) {
        try {
            out.push_back(body());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("error: ") + e.what()});
        }
    };
    const auto pts = interior_points(20, 0.8, 7);
    const auto catalogue = field_catalogue();

    guarded("flow map: rotation and shear oracles", [&] {
        double worst = 0.0;
        const auto& rot = catalogue[1].second;
        const auto& shear = catalogue[2].second;
        for (double t : {0.1, 0.5, 1.0}) {
            const auto sr = FlowMap(rot).sample(pts, t);
            const auto ss = FlowMap(shear).sample(pts, t);
            const Mat2 r = rotation(t);
            const Mat2 s = Mat2::Identity() + t * shear.parameters().shear;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                worst = std::max({worst, (sr.phi[i] - r * pts[i]).norm(), (sr.jac[i] - r).norm(),
                                  (ss.phi[i] - s * pts[i]).norm(), (ss.jac[i] - s).norm()});
            }
        }
        return check("flow map: rotation and shear oracles", worst, 1e-8);
    });
    guarded("flow map: unit determinant (bump)", [&] {
        return check("flow map: unit determinant (bump)",
                     det_deviation(FlowMap(catalogue[3].second).sample(pts, 1.0)), 1e-8);
    });
    guarded("transport kernel: rotation", [&] {
        double worst = 0.0;
        for (double t : {0.3, 1.0}) {
            for (const Mat2& k : LambdaKernel::at_sample(FlowMap(catalogue[1].second).sample(pts, t))) {
                worst = std::max(worst, k.norm());
            }
        }
        return check("transport kernel: rotation", worst, 1e-12);
    });
    guarded("transport kernel: unit shear", [&] {
        double worst = 0.0;
        Mat2 flip;
        flip << 0.0, 1.0, 1.0, 0.0;
        for (double t : {0.3, 1.0}) {
            for (const Mat2& k : LambdaKernel::at_sample(FlowMap(catalogue[2].second).sample(pts, t))) {
                worst = std::max(worst, (k - flip).norm());
            }
        }
        return check("transport kernel: unit shear", worst, 1e-8);
    });
    guarded("transport identity: rotation", [&] {
        const auto mesh = build_disk_mesh(0.2);
        const auto u0 = bump_velocity(BumpStream{Vec2(0.2, 0.0), 0.6, 1.0, 4});
        const auto v0 = bump_velocity(BumpStream{Vec2(-0.1, 0.1), 0.7, 1.0, 4});
        return check("transport identity: rotation",
                     transport_identity_residual(FlowMap(catalogue[1].second), u0, v0, 0.5, 1e-3, mesh),
                     1e-10);
    });
    guarded("transport identity: shear", [&] {
        const auto mesh = build_disk_mesh(0.1);
        const auto u0 = bump_velocity(BumpStream{Vec2(0.2, 0.0), 0.6, 1.0, 4});
        const auto v0 = bump_velocity(BumpStream{Vec2(-0.1, 0.1), 0.7, 1.0, 4});
        return check("transport identity: shear",
                     transport_identity_residual(FlowMap(catalogue[2].second), u0, v0, 0.5, 1e-3, mesh),
                     5.0 * (1e-6 + 0.01));
    });
    for (const auto& [name, field] : catalogue) {
        for (double t : {0.1, 0.5, 1.0}) {
            const std::string label = "appendix identities: " + name + " t=" + format_number(t);
            guarded(label, [&] {
                AppendixOptions opts;
                opts.norm_h = 0.2;
                const AppendixReport r = appendix_identity_suite(field, t, pts, opts);
                PropertyResult res{label, r.passed, ""};
                std::ostringstream os;
                os << "div " << format_number(r.max_divergence) << ", jacobi "
                   << format_number(r.max_jacobi) << ", slack " << format_number(r.min_norm_slack);
                res.detail = os.str();
                return res;
            });
        }
    }
    guarded("moved mesh: area drift (bump)", [&] {
        const auto mesh = build_disk_mesh(0.1);
        const MovedMesh m = move_mesh(mesh, catalogue[3].second, 1.0, 1000);
        return check("moved mesh: area drift (bump)", std::abs(m.area() - mesh->area()), 5.0 * 0.01);
    });
    guarded("saddle solve: manufactured step", [&] {
        const ManufacturedCase mc = make_rotation_case(1.0, default_case_bump());
        RunConfig cfg = mc.run_config(0.1, 0.1, 0.2);
        const Trajectory traj = run(cfg);
        double worst_res = 0.0, worst_div = 0.0;
        for (const auto& d : traj.diagnostics) {
            worst_res = std::max(worst_res, d.residual);
            worst_div = std::max(worst_div, d.divergence);
        }
        PropertyResult r{"saddle solve: manufactured step", worst_res <= 1e-10 && worst_div <= 1e-9, ""};
        r.detail = "residual " + format_number(worst_res) + ", divergence " + format_number(worst_div);
        return r;
    });
    return out;
}

}  // namespace mdflow
