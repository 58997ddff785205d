#include "mdflow/timestepper.hpp"

#include <cmath>
#include <sstream>

namespace mdflow {

int RunConfig::num_steps() const {
    return std::max(1, static_cast<int>(std::ceil(T / tau - 1e-9)));
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
    if (!flow) fail("flow.kind: no flow field given");
    if (!(tau > 0.0) || !std::isfinite(tau)) fail("time.tau must be positive and finite");
    if (!(T >= tau) || !std::isfinite(T)) fail("time.T must be finite and at least time.tau");
    if (!(h > 0.0 && h < 1.0)) fail("domain.h must lie in (0, 1)");
    if (substeps < 1) fail("time.substeps must be at least 1");
    if (!(tolerance > 0.0 && tolerance <= 1e-4)) fail("solver.tolerance must lie in (0, 1e-4]");
    if (max_iterations < 1) fail("solver.max_iterations must be at least 1");
    if (!(reaction >= 0.0) || !std::isfinite(reaction)) fail("solver.reaction must be >= 0");
    if (!(holdall_radius > 1.0)) fail("domain.holdall_radius must exceed the unit disk radius 1");
    if (output.vtk_stride < 0) fail("output.vtk_stride must be >= 0");
}

// ---------------------------------------------------------------------------
// saddle solves

SparseMatrix block_matrix(const SaddleSystem& s) {
    const Eigen::Index nu = s.A.rows(), np = s.B.rows();
    const bool with_mean = s.m.size() > 0;
    const Eigen::Index n = nu + np + (with_mean ? 1 : 0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(s.A.nonZeros() + 2 * s.B.nonZeros() + 2 * np);
    for (Eigen::Index k = 0; k < s.A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(s.A, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    }
    for (Eigen::Index k = 0; k < s.B.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(s.B, k); it; ++it) {
            trips.emplace_back(nu + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), nu + it.row(), it.value());
        }
    }
    if (with_mean) {
        for (Eigen::Index k = 0; k < np; ++k) {
            trips.emplace_back(nu + k, nu + np, s.m[k]);
            trips.emplace_back(nu + np, nu + k, s.m[k]);
        }
    }
    SparseMatrix k(n, n);
    k.setFromTriplets(trips.begin(), trips.end());
    k.makeCompressed();
    return k;
}

void SaddleSolver::Factor::factorize(SparseMatrix k) {
    matrix = std::move(k);
    matrix.makeCompressed();
    std::vector<int> o(matrix.outerIndexPtr(), matrix.outerIndexPtr() + matrix.outerSize() + 1);
    std::vector<int> in(matrix.innerIndexPtr(), matrix.innerIndexPtr() + matrix.nonZeros());
    if (o != outer || in != inner) {
        lu.analyzePattern(matrix);
        outer = std::move(o);
        inner = std::move(in);
    }
    lu.factorize(matrix);
    if (lu.info() != Eigen::Success) {
        outer.clear();
        throw SolverError("sparse LU factorization failed (singular block system)", {});
    }
}

namespace {

// Block matrix without the mean row, pressure dof 0 replaced by an identity
// row and column.
SparseMatrix pinned_matrix(const SaddleSystem& s) {
    SaddleSystem plain;
    plain.A = s.A;
    plain.B = s.B;
    SparseMatrix k = block_matrix(plain);
    const Eigen::Index pin = s.A.rows();
    k.prune([pin](Eigen::Index r, Eigen::Index c, double) { return r != pin && c != pin; });
    SparseMatrix id(k.rows(), k.cols());
    id.insert(pin, pin) = 1.0;
    k += id;
    k.makeCompressed();
    return k;
}

}  // namespace

SaddleSolution SaddleSolver::solve(const SaddleSystem& s, double tol, int max_iterations) {
    if (s.B.cols() != s.A.cols() || s.A.rows() != s.A.cols() || s.rhs_u.size() != s.A.rows()
        || s.rhs_p.size() != s.B.rows() || (s.m.size() != 0 && s.m.size() != s.B.rows())) {
        throw InvalidArgument("saddle system blocks have inconsistent sizes");
    }
    const Eigen::Index nu = s.A.rows(), np = s.B.rows();
    const bool with_mean = s.m.size() > 0 && np > 0;
    const SparseMatrix k = block_matrix(s);
    Vector b = Vector::Zero(k.rows());
    b.head(nu) = s.rhs_u;
    b.segment(nu, np) = s.rhs_p;

    SaddleSolution out;
    const double bnorm = b.norm();
    Vector x = Vector::Zero(k.rows());
    if (bnorm == 0.0) {
        out.u = x.head(nu);
        out.p = x.segment(nu, np);
        return out;
    }

    const double msum = with_mean ? s.m.sum() : 0.0;
    const bool deflate = with_mean && msum != 0.0;
    std::function<Vector(const Vector&)> apply_inverse;
    if (deflate) {
        pinned_.factorize(pinned_matrix(s));
        apply_inverse = [&](const Vector& r) {
            // Multiplier from the kernel direction z = (0, 1, 0).
            const double mu = r.segment(nu, np).sum() / msum;
            Vector rhs = r.head(nu + np);
            rhs.segment(nu, np) -= mu * s.m;
            rhs[nu] = 0.0;
            Vector y = pinned_.lu.solve(rhs);
            const double shift = (r[nu + np] - s.m.dot(y.segment(nu, np))) / msum;
            y.segment(nu, np).array() += shift;
            Vector z(r.size());
            z << y, mu;
            return z;
        };
    } else {
        full_.factorize(k);
        apply_inverse = [&](const Vector& r) -> Vector { return full_.lu.solve(r); };
    }

    auto refine = [&](int budget) {
        Vector r = b - k * x;
        for (int it = 0; it < budget; ++it) {
            x += apply_inverse(r);
            r = b - k * x;
            ++out.iterations;
            out.residual = r.norm() / bnorm;
            out.history.push_back(out.residual);
            if (!std::isfinite(out.residual) || out.residual <= tol) break;
            // Stalled: no progress over the last sweep.
            const std::size_t h = out.history.size();
            if (h >= 2 && out.history[h - 1] > 0.5 * out.history[h - 2]) break;
        }
    };
    refine(max_iterations);
    if (deflate && !(out.residual <= tol) && out.iterations < max_iterations) {
        x.setZero();
        full_.factorize(k);
        apply_inverse = [&](const Vector& r) -> Vector { return full_.lu.solve(r); };
        refine(max_iterations - out.iterations);
    }
    if (!(out.residual <= tol)) {
        std::ostringstream os;
        os << "saddle solve stalled at relative residual " << out.residual << " after "
           << out.iterations << " refinement sweeps (target " << tol << ")";
        throw SolverError(os.str(), out.history);
    }
    out.u = x.head(nu);
    out.p = x.segment(nu, np);
    out.multiplier = with_mean ? x[nu + np] : 0.0;
    return out;
}

SaddleSolution solve_saddle(const SaddleSystem& system, double tol, int max_iterations) {
    SaddleSolver solver;
    return solver.solve(system, tol, max_iterations);
}

// ---------------------------------------------------------------------------
// stepping

TimeStepper::TimeStepper(RunConfig config)
    : TimeStepper(config, (config.validate(), build_disk_mesh(config.h))) {}

TimeStepper::TimeStepper(RunConfig config, std::shared_ptr<const Mesh> reference)
    : config_(std::move(config)), reference_(std::move(reference)) {
    config_.validate();
    if (!config_.advection) config_.advection = config_.flow;
    dofs_ = taylor_hood(*reference_);
}

StepState TimeStepper::initialize() const {
    auto mesh = std::make_shared<const MovedMesh>(reference_configuration(reference_));
    Vector u = Vector::Zero(dofs_.num_velocity_dofs);
    if (config_.initial.value) {
        const PointwiseField& u0 = config_.initial;
        for (std::size_t n = 0; n < dofs_.num_nodes; ++n) {
            const Vec2 x = mesh->fe_node(n);
            double div;
            double scale;
            if (u0.has_jacobian()) {
                const Mat2 j = u0.jacobian(x);
                div = j.trace();
                scale = 1.0 + j.norm();
            } else {
                div = fd_divergence(u0.value, x, 1e-5);
                scale = 1e3 * (1.0 + u0(x).norm());
            }
            if (std::abs(div) > 1e-10 * scale) {
                std::ostringstream os;
                os << "initial velocity is not divergence-free: div = " << div << " at (" << x.x()
                   << ", " << x.y() << ")";
                throw InvalidArgument(os.str());
            }
        }
        u = interpolate_velocity(*mesh, dofs_, u0.value);
        for (int i : dofs_.boundary_velocity_dofs) u[i] = 0.0;
    }
    StepState s;
    s.index = 0;
    s.t = 0.0;
    s.u = make_velocity(*mesh, dofs_, std::move(u));
    s.p = make_pressure(*mesh, dofs_, Vector::Zero(dofs_.num_pressure_dofs));
    s.mesh = std::move(mesh);
    return s;
}

StepState TimeStepper::step(const StepState& state, StepDiagnostics* diagnostics) {
    const RunConfig& c = config_;
    const double tau = c.tau;
    const double t1 = (state.index + 1) * tau;
    auto mesh = std::make_shared<const MovedMesh>(
        move_mesh(*state.mesh, *c.flow, t1, c.substeps, c.holdall_radius));

    SparseMatrix a = assemble_mass(*mesh, dofs_);
    const double mass_factor = 1.0 + tau * c.reaction;
    if (mass_factor != 1.0) a *= mass_factor;
    a += tau * assemble_stiffness(*mesh, dofs_);
    if (!c.advection_equals_flow()) {
        const VelocityField& v = *c.advection;
        const VelocityField& w = *c.flow;
        a += tau * assemble_convection(
                       *mesh, dofs_, [&](const Vec2& x) { return Vec2(v.value(t1, x) - w.value(t1, x)); },
                       c.skew_convection);
    }
    DivergenceBlocks div = assemble_div(*mesh, dofs_);

    SaddleSystem sys;
    sys.A = std::move(a);
    sys.B = -tau * div.B;
    sys.m = div.m;
    sys.rhs_u = cross_mass_rhs(*state.mesh, state.u, *mesh, dofs_);
    if (c.forcing) {
        sys.rhs_u += tau * assemble_load(*mesh, dofs_, [&](const Vec2& x) { return c.forcing(t1, x); });
    }
    sys.rhs_p = Vector::Zero(dofs_.num_pressure_dofs);
    sys.boundary_mask = dofs_.velocity_boundary_mask;
    sys = apply_dirichlet(std::move(sys));

    SaddleSolution sol;
    try {
        sol = solver_.solve(sys, c.tolerance, c.max_iterations);
    } catch (const SolverError& e) {
        std::ostringstream os;
        os << "step " << state.index + 1 << " (t = " << t1 << "): " << e.what();
        throw SolverError(os.str(), e.residual_history);
    }

    StepState next;
    next.index = state.index + 1;
    next.t = t1;
    next.u = make_velocity(*mesh, dofs_, std::move(sol.u));
    next.p = make_pressure(*mesh, dofs_, std::move(sol.p));
    if (diagnostics) {
        diagnostics->step = next.index;
        diagnostics->t = t1;
        diagnostics->iterations = sol.iterations;
        diagnostics->residual = sol.residual;
        diagnostics->divergence = next.u.values.size() ? (div.B * next.u.values).cwiseAbs().maxCoeff() : 0.0;
        diagnostics->kinetic_energy =
            0.5 * next.u.values.dot(assemble_mass(*mesh, dofs_) * next.u.values);
    }
    next.mesh = std::move(mesh);
    return next;
}

Trajectory run(const RunConfig& config) {
    config.validate();
    return run(config, build_disk_mesh(config.h));
}

Trajectory run(const RunConfig& config, std::shared_ptr<const Mesh> reference) {
    TimeStepper stepper(config, std::move(reference));
    Trajectory traj;
    traj.config = stepper.config();
    traj.dofs = stepper.dofs();
    StepState state = stepper.initialize();
    traj.states.push_back(state);
    const int n = config.num_steps();
    for (int k = 0; k < n; ++k) {
        StepDiagnostics d;
        state = stepper.step(state, &d);
        traj.diagnostics.push_back(d);
        if (config.keep_states || k + 1 == n) traj.states.push_back(state);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// interpolation between steps

namespace {

struct Bracket {
    const StepState* lo;
    const StepState* hi;
    double theta;
};

Bracket bracket(const Trajectory& traj, double t) {
    const auto& s = traj.states;
    if (s.size() < 2) throw InvalidArgument("trajectory has fewer than two states");
    const double eps = 1e-12 * (1.0 + std::abs(t));
    if (t < s.front().t - eps || t > s.back().t + eps) {
        std::ostringstream os;
        os << "t = " << t << " outside the trajectory range [" << s.front().t << ", " << s.back().t << "]";
        throw InvalidArgument(os.str());
    }
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k + 1].index != s[k].index + 1) {
            throw InvalidArgument("interpolation needs a trajectory with all states kept");
        }
        if (t <= s[k + 1].t + eps) {
            const double theta = std::clamp((t - s[k].t) / (s[k + 1].t - s[k].t), 0.0, 1.0);
            return {&s[k], &s[k + 1], theta};
        }
    }
    return {&s[s.size() - 2], &s.back(), 1.0};
}

PointwiseField blend(const Trajectory& traj, double t, bool piola) {
    const Bracket b = bracket(traj, t);
    const RunConfig& c = traj.config;
    const FlowMap flow(*c.flow, std::min(1e-3, c.tau / c.substeps), c.holdall_radius);
    const PointwiseField u_lo = velocity_field(b.lo->mesh, traj.dofs, b.lo->u.values);
    const PointwiseField u_hi = velocity_field(b.hi->mesh, traj.dofs, b.hi->u.values);
    const double t_lo = b.lo->t, t_hi = b.hi->t, theta = b.theta;
    auto value = [flow, u_lo, u_hi, t_lo, t_hi, t, theta, piola](const Vec2& x) -> Vec2 {
        const Vec2 y = flow.inverse(x, t);
        const FlowMapSample s_lo = flow.sample(y, t_lo);
        const FlowMapSample s_t = advance_flowmap(flow.field(), s_lo, t, flow.substeps_for(t - t_lo),
                                                  flow.holdall_radius());
        const FlowMapSample s_hi = advance_flowmap(flow.field(), s_t, t_hi, flow.substeps_for(t_hi - t),
                                                   flow.holdall_radius());
        const Vec2 a = u_lo(s_lo.phi[0]);
        const Vec2 bb = u_hi(s_hi.phi[0]);
        if (!piola) return (1.0 - theta) * a + theta * bb;
        const Vec2 pulled = (1.0 - theta) * s_lo.jac[0].inverse() * a + theta * s_hi.jac[0].inverse() * bb;
        return s_t.jac[0] * pulled;
    };
    return make_pointwise(std::move(value), {}, t);
}

}  // namespace

PointwiseField interpolate_state(const Trajectory& trajectory, double t) { return blend(trajectory, t, true); }

PointwiseField interpolate_naive(const Trajectory& trajectory, double t) { return blend(trajectory, t, false); }

}  // namespace mdflow
