// Acceptance suite: one PASS/FAIL line per criterion, each with its measured
// values and wall time. A criterion also fails when it exceeds its time budget.

#include "mdflow/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace mdflow;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator<<(const T& v) {
        os_ << v;
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string fixed(double v, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Deterministic points spread over the disk of the given radius.
std::vector<Vec2> disk_points(int n, double radius, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) {
        const double r = radius * std::sqrt(u(rng)), a = 2.0 * M_PI * u(rng);
        pts.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return pts;
}

Mat2 rotation(double a) {
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

FieldParameters unit_parameters() {
    FieldParameters p;
    p.omega = 1.0;
    p.shear << 0.0, 1.0, 0.0, 0.0;
    p.bump = BumpStream{Vec2(0.1, 0.0), 0.8, 0.2, 4};
    return p;
}

struct NamedField {
    std::string name;
    VelocityField field;
};

std::vector<NamedField> three_kinds() {
    const FieldParameters p = unit_parameters();
    return {{"rotation", make_field(FieldKind::RigidRotation, p)},
            {"shear", make_field(FieldKind::Shear, p)},
            {"bump", make_field(FieldKind::StreamBump, p)}};
}

// --- 1 -------------------------------------------------------------------------------

Outcome flow_map_fidelity() {
    const FieldParameters p = unit_parameters();
    const auto pts = disk_points(200, 1.0, 11);
    double rot = 0.0, shear = 0.0, det = 0.0;
    for (double t : {0.1, 0.5, 1.0}) {
        const FlowMap fr(make_field(FieldKind::RigidRotation, p), 1e-3);
        const FlowMapSample sr = fr.sample(pts, t);
        const Mat2 R = rotation(t);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            rot = std::max({rot, (sr.phi[i] - R * pts[i]).norm(), (sr.jac[i] - R).norm()});
        }
        const FlowMap fs(make_field(FieldKind::Shear, p), 1e-3);
        const FlowMapSample ss = fs.sample(pts, t);
        const Mat2 S = Mat2::Identity() + t * p.shear;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            shear = std::max({shear, (ss.phi[i] - S * pts[i]).norm(), (ss.jac[i] - S).norm()});
        }
        const FlowMap fb(make_field(FieldKind::StreamBump, p), 1e-3);
        det = std::max(det, det_deviation(fb.sample(pts, t)));
    }
    return {rot <= 1e-8 && shear <= 1e-8 && det <= 1e-8,
            "rotation " + sci(rot) + ", shear " + sci(shear) + ", bump |det-1| " + sci(det) + " (tol 1e-8)"};
}

// --- 2 -------------------------------------------------------------------------------

Outcome divergence_preservation() {
    const auto pts = disk_points(100, 0.8, 12);
    const auto u0 = bump_velocity(BumpStream{Vec2(0.1, -0.1), 0.8, 1.0, 4});
    const auto ut = bump_velocity(BumpStream{Vec2::Zero(), 0.5, 1.0, 4});
    const double step = 2e-5;  // truncation error ~ step^2 stays well below the tolerance
    Outcome out;
    Detail d;
    for (const auto& [name, field] : three_kinds()) {
        const FlowMap flow(field, 1e-3);
        double worst = 0.0;
        for (double t : {0.1, 0.5, 1.0}) {
            const PointwiseField pushed = piola_push(flow, t, u0);
            const PointwiseField pulled = piola_pull(flow, t, ut);
            const FlowMapSample s = flow.sample(pts, t);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                worst = std::max(worst, std::abs(fd_divergence(pushed.value, s.phi[i], step)));
                worst = std::max(worst, std::abs(fd_divergence(pulled.value, pts[i], step)));
            }
        }
        out.passed = out.passed && worst <= 1e-5;
        d << name << " " << sci(worst) << ", ";
    }
    out.detail = "max |div|: " + d.str() + "tol 1e-5";
    return out;
}

// --- 3 -------------------------------------------------------------------------------

Outcome lambda_kernel_checks() {
    const FieldParameters p = unit_parameters();
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> time(0.0, 2.0);
    const auto pts = disk_points(50, 0.8, 14);
    double rot = 0.0, shear = 0.0, asym = 0.0;
    Mat2 swap;
    swap << 0.0, 1.0, 1.0, 0.0;
    std::vector<VelocityField> others = {make_field(FieldKind::StreamBump, p),
                                         make_composite({make_field(FieldKind::RigidRotation, p),
                                                         make_field(FieldKind::StreamBump, p)})};
    for (int k = 0; k < 5; ++k) {
        const double t = time(rng);
        for (const Mat2& m : LambdaKernel::at_sample(
                 advance_flowmap(make_field(FieldKind::RigidRotation, p), pts, t, 1000))) {
            rot = std::max(rot, m.norm());
        }
        for (const Mat2& m :
             LambdaKernel::at_sample(advance_flowmap(make_field(FieldKind::Shear, p), pts, t, 1000))) {
            shear = std::max(shear, (m - swap).norm());
            asym = std::max(asym, (m - m.transpose()).norm());
        }
        for (const auto& f : others) {
            for (const Mat2& m : LambdaKernel::at_sample(advance_flowmap(f, pts, t, 1000))) {
                asym = std::max(asym, (m - m.transpose()).norm() / std::max(1.0, m.norm()));
            }
        }
    }
    return {rot <= 1e-12 && shear <= 1e-8 && asym <= 1e-14,
            "rotation |M| " + sci(rot) + " (tol 1e-12), shear |M - [[0,1],[1,0]]| " + sci(shear)
                + " (tol 1e-8), asymmetry " + sci(asym)};
}

// --- 4 -------------------------------------------------------------------------------

Outcome transport_identity() {
    const auto u0 = bump_velocity(BumpStream{Vec2(0.2, 0.0), 0.6, 1.0, 4});
    const auto v0 = bump_velocity(BumpStream{Vec2(-0.1, 0.1), 0.7, 1.0, 4});
    FieldParameters p;
    p.shear << 0.0, 1.0, 0.0, 0.0;
    p.modulation_amplitude = 0.5;
    p.modulation_frequency = 3.0;
    const FlowMap flow(make_field(FieldKind::Shear, p), 5e-3);
    const double t = 0.5;
    const double r1 = transport_identity_residual(flow, u0, v0, t, 1e-3, build_disk_mesh(0.05));
    const double r2 = transport_identity_residual(flow, u0, v0, t, 5e-4, build_disk_mesh(0.025));
    const double b1 = 5.0 * (1e-6 + 0.05 * 0.05), b2 = 5.0 * (2.5e-7 + 0.025 * 0.025);
    const double ratio = r1 / r2;
    return {r1 <= b1 && r2 <= b2 && ratio >= 3.0 && ratio <= 5.0,
            "residual " + sci(r1) + " <= " + sci(b1) + ", halved " + sci(r2) + " <= " + sci(b2)
                + ", ratio " + fixed(ratio, 2) + " (expected 4, window [3, 5])"};
}

// --- 5 -------------------------------------------------------------------------------

Outcome appendix_suite() {
    const FieldParameters p = unit_parameters();
    std::vector<NamedField> kinds = three_kinds();
    kinds.push_back({"composite", make_composite({make_field(FieldKind::RigidRotation, p),
                                                  make_field(FieldKind::StreamBump, p)})});
    const auto pts = disk_points(50, 0.7, 15);
    AppendixOptions options;
    options.norm_h = 0.2;  // the slack does not depend on the quadrature mesh
    Outcome out;
    double jacobi = 0.0, slack = std::numeric_limits<double>::infinity(), div = 0.0;
    for (const auto& [name, field] : kinds) {
        for (double t : {0.1, 0.5, 1.0}) {
            const AppendixReport r = appendix_identity_suite(field, t, pts, options);
            jacobi = std::max(jacobi, r.max_jacobi);
            slack = std::min(slack, r.min_norm_slack);
            div = std::max(div, r.max_divergence);
            if (!r.passed) {
                out.passed = false;
                out.detail += name + " t=" + fixed(t, 1) + ": " + r.failures.front() + "; ";
            }
        }
    }
    out.passed = out.passed && jacobi <= 1e-6 && slack >= -1e-12;
    out.detail += "Jacobi " + sci(jacobi) + " (tol 1e-6), min relative slack " + sci(slack)
                  + " (>= -1e-12), divergence " + sci(div);
    return out;
}

// --- 6 -------------------------------------------------------------------------------

Outcome mesh_geometry() {
    FieldParameters p = unit_parameters();
    FieldParameters edge = p;
    edge.bump = BumpStream{Vec2(0.5, 0.0), 0.8, 0.1, 4};  // reaches the boundary
    std::vector<NamedField> kinds = three_kinds();
    kinds.push_back({"edge bump", make_field(FieldKind::StreamBump, edge)});
    kinds.push_back({"rotation+edge bump", make_composite({make_field(FieldKind::RigidRotation, p),
                                                           make_field(FieldKind::StreamBump, edge)})});
    Outcome out;
    Detail d;
    const std::array<double, 2> hs = {0.1, 0.05};
    std::array<std::shared_ptr<const Mesh>, 2> meshes = {build_disk_mesh(hs[0]), build_disk_mesh(hs[1])};
    for (const auto& [name, field] : kinds) {
        double err[2], drift[2];
        for (int k = 0; k < 2; ++k) {
            MovedMesh m = reference_configuration(meshes[k]);
            const double a0 = m.area();
            err[k] = std::abs(a0 - M_PI);
            drift[k] = 0.0;
            for (int i = 1; i <= 10; ++i) {
                m = move_mesh(m, field, 0.1 * i, 20);
                err[k] = std::max(err[k], std::abs(m.area() - M_PI));
                drift[k] = std::max(drift[k], std::abs(m.area() - a0));
            }
        }
        const double c = err[1] / (hs[1] * hs[1]);
        const double factor = err[0] / err[1];
        bool ok = factor >= 3.0 && factor <= 5.0;
        d << name << ": max|A-pi| " << sci(err[1]) << " = " << fixed(c) << " h^2, factor " << fixed(factor, 2);
        if (drift[0] > 1e-12) {
            const double fd = drift[0] / drift[1];
            ok = ok && fd >= 3.0 && fd <= 5.0;
            d << ", drift from t=0 " << sci(drift[1]) << " factor " << fixed(fd, 2);
        } else {
            d << ", drift from t=0 " << sci(std::max(drift[0], drift[1]));
        }
        d << "; ";
        out.passed = out.passed && ok;
    }
    out.detail = d.str() + "window [3, 5]";
    return out;
}

// --- 7 -------------------------------------------------------------------------------

Outcome saddle_solves() {
    const std::vector<ManufacturedCase> cases = {
        make_rotation_case(kDefaultCaseOmega, default_case_bump()),
        make_rotation_case(kDefaultCaseOmega, default_case_bump(),
                           default_cross_advection(kDefaultCaseOmega))};
    double residual = 0.0, divergence = 0.0, step_time = 0.0;
    int steps = 0;
    for (const auto& mc : cases) {
        for (double tau : {0.1, 0.05}) {
            RunConfig cfg = mc.run_config(0.05, tau, 0.5);
            TimeStepper stepper(cfg);
            StepState s = stepper.initialize();
            for (int n = 0; n < cfg.num_steps(); ++n) {
                StepDiagnostics d;
                const auto t0 = std::chrono::steady_clock::now();
                s = stepper.step(s, &d);
                step_time = std::max(step_time, seconds_since(t0));
                residual = std::max(residual, d.residual);
                divergence = std::max(divergence, d.divergence);
                ++steps;
            }
        }
    }
    return {residual <= 1e-10 && divergence <= 1e-9 && step_time < 2.0,
            std::to_string(steps) + " steps at h=0.05: max residual " + sci(residual)
                + " (tol 1e-10), max |Bu| " + sci(divergence) + " (tol 1e-9), slowest step "
                + fixed(step_time, 2) + " s (< 2 s)"};
}

// --- 8 -------------------------------------------------------------------------------

Outcome time_convergence() {
    const std::vector<double> taus = {0.1, 0.05, 0.025, 0.0125};
    const double h = 0.04, T = 0.5;
    struct Case {
        std::string name;
        ManufacturedCase mc;
    };
    const std::vector<Case> cases = {
        {"V=w", make_rotation_case(kDefaultCaseOmega, default_case_bump())},
        {"V!=w", make_rotation_case(kDefaultCaseOmega, default_case_bump(),
                                    default_cross_advection(kDefaultCaseOmega))}};
    Outcome out;
    Detail d;
    for (const auto& c : cases) {
        const ErrorReport r = convergence_study(c.mc, taus, h, T);
        double min_order = std::numeric_limits<double>::infinity(), residual = 0.0, divergence = 0.0;
        d << c.name << " L2 orders";
        for (double o : r.order_l2) {
            d << " " << fixed(o);
            min_order = std::min(min_order, o);
        }
        d << ", H1 orders";
        for (double o : r.order_h1) {
            d << " " << fixed(o);
            min_order = std::min(min_order, o);
        }
        for (const auto& run : r.diagnostics) {
            for (const auto& s : run) {
                residual = std::max(residual, s.residual);
                divergence = std::max(divergence, s.divergence);
            }
        }
        d << ", errors at tau=1/80 " << sci(r.rows.back().l2) << " / " << sci(r.rows.back().h1)
          << ", spatial estimate " << sci(r.probe.estimate.l2) << " / " << sci(r.probe.estimate.h1)
          << (r.valid ? ", guard ok" : ", " + r.note) << ", residual " << sci(residual) << ", |Bu| "
          << sci(divergence) << "; ";
        out.passed = out.passed && r.valid && min_order >= 0.9 && residual <= 1e-10 && divergence <= 1e-9;
    }
    out.detail = d.str() + "orders >= 0.9";
    return out;
}

// --- 9 -------------------------------------------------------------------------------

// sup over [0, T] x Omega(t) of the largest eigenvalue of the transport kernel,
// sampled at the mesh vertices every 0.01 in time.
double kernel_growth_bound(const VelocityField& field, const Mesh& mesh, double T) {
    double growth = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double t = T * k / 100.0;
        const FlowMapSample s = advance_flowmap(field, mesh.vertices, t, std::max(1, k * 10));
        for (const Mat2& m : LambdaKernel::at_sample(s)) {
            growth = std::max(growth, Eigen::SelfAdjointEigenSolver<Mat2>(0.5 * (m + m.transpose()))
                                          .eigenvalues()
                                          .maxCoeff());
        }
    }
    return growth;
}

Outcome energy_stability() {
    const FieldParameters p = unit_parameters();
    FieldParameters cross = p;
    cross.bump = BumpStream{Vec2(-0.2, 0.1), 0.7, 0.5, 4};
    auto rot = std::make_shared<const VelocityField>(make_field(FieldKind::RigidRotation, p));
    auto shear = std::make_shared<const VelocityField>(make_field(FieldKind::Shear, p));
    auto bump = std::make_shared<const VelocityField>(make_field(FieldKind::StreamBump, p));
    auto sheared = std::make_shared<const VelocityField>(
        make_composite({*shear, make_field(FieldKind::StreamBump, cross)}));
    struct Case {
        std::string name;
        std::shared_ptr<const VelocityField> w, v;
    };
    const std::vector<Case> cases = {{"rotation", rot, rot}, {"shear, V!=w", shear, sheared}, {"bump", bump, bump}};
    const double h = 0.1, T = 1.0;
    auto mesh = build_disk_mesh(h);
    Outcome out;
    Detail d;
    for (const auto& c : cases) {
        const double lambda = kernel_growth_bound(*c.w, *mesh, T);
        double worst = -std::numeric_limits<double>::infinity();
        bool ok = true;
        for (double tau : {0.5, 0.1, 0.01}) {
            RunConfig cfg;
            cfg.flow = c.w;
            cfg.advection = c.v;
            cfg.h = h;
            cfg.tau = tau;
            cfg.T = T;
            cfg.keep_states = false;
            cfg.initial = bump_velocity(BumpStream{Vec2(0.1, 0.0), 0.8, 1.0, 4});
            const Trajectory tr = run(cfg, mesh);
            const StepState& s0 = tr.states.front();
            double e = 0.5 * s0.u.values.dot(assemble_mass(*s0.mesh, tr.dofs) * s0.u.values);
            for (const auto& step : tr.diagnostics) {
                const double next = step.kinetic_energy;
                ok = ok && std::isfinite(next) && next <= (1.0 + tau * lambda) * e * (1.0 + 1e-12);
                worst = std::max(worst, (next / e - 1.0) / tau);
                e = next;
            }
        }
        d << c.name << ": Lambda " << fixed(lambda) << ", max (E_{n+1}/E_n - 1)/tau " << fixed(worst) << "; ";
        out.passed = out.passed && ok;
    }
    out.detail = d.str() + "tau in {0.5, 0.1, 0.01}, T=1";
    return out;
}

// --- 10 ------------------------------------------------------------------------------

Outcome interpolation_remark() {
    FieldParameters p;
    p.shear << 0.0, 1.0, 0.0, 0.0;
    RunConfig cfg;
    cfg.flow = std::make_shared<const VelocityField>(make_field(FieldKind::Shear, p));
    cfg.advection = cfg.flow;
    cfg.h = 0.1;
    cfg.tau = 0.1;
    cfg.T = 1.0;
    cfg.keep_states = true;
    cfg.initial = bump_velocity(BumpStream{Vec2::Zero(), 0.8, 1.0, 4});
    const Trajectory tr = run(cfg);
    const auto ref = disk_points(100, 0.6, 16);
    Outcome out;
    double worst_ratio = 0.0;
    int midpoints = 0;
    for (int n = 0; n + 1 < static_cast<int>(tr.states.size()); ++n) {
        const double t = 0.5 * (tr.states[n].t + tr.states[n + 1].t);
        const PointwiseField piola = interpolate_state(tr, t);
        const PointwiseField naive = interpolate_naive(tr, t);
        const Mat2 S = Mat2::Identity() + t * p.shear;
        double sp = 0.0, sn = 0.0;
        for (const Vec2& y : ref) {
            const Vec2 x = S * y;
            sp += std::pow(fd_divergence(piola.value, x, 1e-5), 2);
            sn += std::pow(fd_divergence(naive.value, x, 1e-5), 2);
        }
        const double ratio = std::sqrt(sp / sn);
        worst_ratio = std::max(worst_ratio, ratio);
        out.passed = out.passed && sp < sn;
        ++midpoints;
    }
    out.detail = std::to_string(midpoints) + " midpoints, largest ||div piola|| / ||div naive|| " + fixed(worst_ratio, 4)
                 + " (< 1 at every midpoint)";
    return out;
}

}  // namespace

// Arguments select criteria by number; none runs all.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    struct Criterion {
        int id;
        std::string name;
        double budget_s;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria = {
        {1, "flow-map fidelity", 5.0, flow_map_fidelity},
        {2, "divergence preservation", 10.0, divergence_preservation},
        {3, "transport kernel", 5.0, lambda_kernel_checks},
        {4, "transport identity", 60.0, transport_identity},
        {5, "appendix identities", 30.0, appendix_suite},
        {6, "mesh geometry", 30.0, mesh_geometry},
        {7, "saddle solves", 120.0, saddle_solves},
        {8, "time convergence", 900.0, time_convergence},
        {9, "energy stability", 300.0, energy_stability},
        {10, "interpolation remark", 30.0, interpolation_remark},
    };
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = seconds_since(t0);
        const bool in_time = elapsed < c.budget_s;
        const bool ok = o.passed && in_time;
        failed += ok ? 0 : 1;
        std::printf("%s %2d %s [%.1f s / %.0f s%s]: %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    elapsed, c.budget_s, in_time ? "" : ", over budget", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
