#include "mdflow/transforms.hpp"

#include <cmath>
#include <sstream>

namespace mdflow {

PointwiseField make_pointwise(std::function<Vec2(const Vec2&)> value,
                              std::function<Mat2(const Vec2&)> jacobian, double time) {
    return PointwiseField{std::move(value), std::move(jacobian), time};
}

PointwiseField bump_velocity(const BumpStream& stream, double time) {
    return make_pointwise([stream](const Vec2& x) { return stream.velocity(x); },
                          [stream](const Vec2& x) { return stream.velocity_jacobian(x); }, time);
}

// ---------------------------------------------------------------------------
// batch

std::vector<Vec2> piola_push_values(const FlowMapSample& sample, const PointwiseField& u) {
    std::vector<Vec2> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) out[i] = sample.jac[i] * u(sample.points[i]);
    return out;
}

std::vector<Vec2> piola_pull_values(const FlowMapSample& sample, const PointwiseField& u_t) {
    std::vector<Vec2> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        out[i] = sample.jac[i].inverse() * u_t(sample.phi[i]);
    }
    return out;
}

std::vector<Vec2> covariant_values(const FlowMapSample& sample, const PointwiseField& v,
                                   Direction direction) {
    std::vector<Vec2> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (direction == Direction::Pull) {
            out[i] = sample.jac[i].transpose() * v(sample.phi[i]);
        } else {
            out[i] = sample.jac[i].inverse().transpose() * v(sample.points[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// lazy

namespace {

void require_inside(const ReferenceDomain& domain, const Vec2& y, const Vec2& x, double t) {
    if (!domain.contains(y)) {
        std::ostringstream os;
        os << "point (" << x.x() << ", " << x.y() << ") at t = " << t
           << " has preimage outside the reference domain";
        throw DomainError(os.str());
    }
}

}  // namespace

PointwiseField piola_push(const FlowMap& flow, double t, PointwiseField u, ReferenceDomain domain) {
    if (t == 0.0) {
        u.time = 0.0;
        return u;
    }
    auto value = [flow, t, u, domain](const Vec2& x) -> Vec2 {
        const Vec2 y = flow.inverse(x, t);
        require_inside(domain, y, x, t);
        const FlowMapSample s = flow.sample(y, t);
        return s.jac[0] * u(y);
    };
    return make_pointwise(std::move(value), {}, t);
}

PointwiseField piola_pull(const FlowMap& flow, double t, PointwiseField u_t, ReferenceDomain domain) {
    if (t == 0.0) return u_t;
    auto value = [flow, t, u_t, domain](const Vec2& y) -> Vec2 {
        require_inside(domain, y, y, 0.0);
        const FlowMapSample s = flow.sample(y, t);
        return s.jac[0].inverse() * u_t(s.phi[0]);
    };
    return make_pointwise(std::move(value), {}, 0.0);
}

PointwiseField covariant_transform(const FlowMap& flow, double t, PointwiseField v,
                                   Direction direction, ReferenceDomain domain) {
    if (t == 0.0) return v;
    if (direction == Direction::Pull) {
        auto value = [flow, t, v, domain](const Vec2& y) -> Vec2 {
            require_inside(domain, y, y, 0.0);
            const FlowMapSample s = flow.sample(y, t);
            return s.jac[0].transpose() * v(s.phi[0]);
        };
        return make_pointwise(std::move(value), {}, 0.0);
    }
    auto value = [flow, t, v, domain](const Vec2& x) -> Vec2 {
        const Vec2 y = flow.inverse(x, t);
        require_inside(domain, y, x, t);
        const FlowMapSample s = flow.sample(y, t);
        return s.jac[0].inverse().transpose() * v(y);
    };
    return make_pointwise(std::move(value), {}, t);
}

TimeField pushed_family(const FlowMap& flow, PointwiseField u0) {
    return [flow, u0](double t, const Vec2& x) -> Vec2 {
        if (t == 0.0) return u0(x);
        const Vec2 y = flow.inverse(x, t);
        return flow.sample(y, t).jac[0] * u0(y);
    };
}

// ---------------------------------------------------------------------------
// lambda kernel

Mat2 lambda_matrix(const Mat2& jac, const Mat2& jac_dt) {
    const Mat2 s = jac_dt.transpose() * jac;
    const Mat2 gram_dt = s + s.transpose();
    const Mat2 inv = jac.inverse();
    const Mat2 m = inv.transpose() * gram_dt * inv;
    return 0.5 * (m + m.transpose());
}

LambdaKernel::LambdaKernel(FlowMap flow, double t) : flow_(std::move(flow)), t_(t) {}

namespace {

void assert_nonsingular(const Mat2& jac) {
    const double det = jac.determinant();
    if (!(std::abs(det) > 1e-12)) {
        throw GeometryError("singular flow-map Jacobian in lambda kernel");
    }
}

std::size_t hash_points(std::span<const Vec2> points) {
    std::size_t h = points.size();
    for (const Vec2& p : points) {
        for (int k = 0; k < 2; ++k) {
            h ^= std::hash<double>{}(p[k]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
    }
    return h;
}

}  // namespace

Mat2 LambdaKernel::operator()(const Vec2& x) const {
    const Vec2 y = flow_.inverse(x, t_);
    const FlowMapSample s = flow_.sample(y, t_);
    assert_nonsingular(s.jac[0]);
    return lambda_matrix(s.jac[0], s.jac_dt[0]);
}

std::vector<Mat2> LambdaKernel::evaluate(std::span<const Vec2> points) const {
    const std::size_t key = hash_points(points);
    {
        std::lock_guard lock(cache_mutex_);
        if (key == cache_key_ && cache_points_.size() == points.size()
            && std::equal(points.begin(), points.end(), cache_points_.begin())) {
            return cache_values_;
        }
    }
    const std::vector<Vec2> pre = flow_.inverse(points, t_);
    const FlowMapSample s = flow_.sample(pre, t_);
    std::vector<Mat2> values = at_sample(s);
    std::lock_guard lock(cache_mutex_);
    cache_key_ = key;
    cache_points_.assign(points.begin(), points.end());
    cache_values_ = values;
    return values;
}

std::vector<Mat2> LambdaKernel::at_sample(const FlowMapSample& sample) {
    std::vector<Mat2> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        assert_nonsingular(sample.jac[i]);
        out[i] = lambda_matrix(sample.jac[i], sample.jac_dt[i]);
    }
    return out;
}

LambdaKernel lambda_kernel(const VelocityField& field, double t, double max_dt,
                           double holdall_radius) {
    return LambdaKernel(FlowMap(field, max_dt, holdall_radius), t);
}

// ---------------------------------------------------------------------------
// material derivatives

PointwiseField material_derivative(const FlowMap& flow, TimeField u, double t,
                                   MaterialConvention convention, double fd_step,
                                   double horizon) {
    if (!(fd_step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    if (t - fd_step < 0.0 || t + fd_step > horizon) {
        std::ostringstream os;
        os << "material derivative stencil [" << t - fd_step << ", " << t + fd_step
           << "] leaves the time interval [0, " << horizon << "]";
        throw InvalidArgument(os.str());
    }
    auto value = [flow, u, t, convention, fd_step](const Vec2& x) -> Vec2 {
        const Vec2 y = flow.inverse(x, t);
        const double lo = t - fd_step;
        const double hi = t + fd_step;
        const FlowMapSample s_lo = flow.sample(y, lo);
        const FlowMapSample s_mid =
            advance_flowmap(flow.field(), s_lo, t, flow.substeps_for(fd_step), flow.holdall_radius());
        const FlowMapSample s_hi =
            advance_flowmap(flow.field(), s_mid, hi, flow.substeps_for(fd_step), flow.holdall_radius());
        if (convention == MaterialConvention::W) {
            return (u(hi, s_hi.phi[0]) - u(lo, s_lo.phi[0])) / (2.0 * fd_step);
        }
        const Vec2 g_hi = s_hi.jac[0].inverse() * u(hi, s_hi.phi[0]);
        const Vec2 g_lo = s_lo.jac[0].inverse() * u(lo, s_lo.phi[0]);
        return s_mid.jac[0] * ((g_hi - g_lo) / (2.0 * fd_step));
    };
    return make_pointwise(std::move(value), {}, t);
}

// ---------------------------------------------------------------------------
// finite differences

Mat2 fd_jacobian(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double step) {
    Mat2 j;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = step;
        j.col(k) = (f(x + e) - f(x - e)) / (2.0 * step);
    }
    return j;
}

double fd_divergence(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double step) {
    const Vec2 ex(step, 0.0);
    const Vec2 ey(0.0, step);
    return (f(x + ex).x() - f(x - ex).x() + f(x + ey).y() - f(x - ey).y()) / (2.0 * step);
}

}  // namespace mdflow
