#include "mdflow/flowmap.hpp"

#include <cmath>
#include <sstream>

namespace mdflow {

const char* to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Zero: return "zero";
        case FieldKind::RigidRotation: return "rotation";
        case FieldKind::Shear: return "shear";
        case FieldKind::StreamBump: return "bump";
        case FieldKind::CompositeSum: return "composite";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// BumpStream

namespace {

struct Profile {
    double g0 = 0, g1 = 0, g2 = 0, g3 = 0;  // g(q) = (1-q)^k and derivatives in q
};

Profile bump_profile(double q, int k) {
    Profile p;
    if (q >= 1.0) return p;
    const double s = 1.0 - q;
    const auto pw = [s](int e) { return e <= 0 ? 1.0 : std::pow(s, e); };
    p.g0 = pw(k);
    p.g1 = -k * pw(k - 1);
    p.g2 = k >= 2 ? double(k) * (k - 1) * pw(k - 2) : 0.0;
    p.g3 = k >= 3 ? -double(k) * (k - 1) * (k - 2) * pw(k - 3) : 0.0;
    return p;
}

}  // namespace

double BumpStream::psi(const Vec2& x) const {
    const Vec2 z = x - center;
    const double q = z.squaredNorm() / (radius * radius);
    return amplitude * bump_profile(q, exponent).g0;
}

Vec2 BumpStream::gradient(const Vec2& x) const {
    const Vec2 z = x - center;
    const double r2 = radius * radius;
    const Profile p = bump_profile(z.squaredNorm() / r2, exponent);
    return amplitude * p.g1 * 2.0 / r2 * z;
}

Mat2 BumpStream::hessian(const Vec2& x) const {
    const Vec2 z = x - center;
    const double r2 = radius * radius;
    const Profile p = bump_profile(z.squaredNorm() / r2, exponent);
    return amplitude * (p.g2 * 4.0 / (r2 * r2) * (z * z.transpose())
                        + p.g1 * 2.0 / r2 * Mat2::Identity());
}

Vec2 BumpStream::gradient_of_laplacian(const Vec2& x) const {
    const Vec2 z = x - center;
    const double r2 = radius * radius;
    const double q = z.squaredNorm() / r2;
    const Profile p = bump_profile(q, exponent);
    return amplitude * 8.0 / (r2 * r2) * (p.g3 * q + 2.0 * p.g2) * z;
}

Vec2 BumpStream::velocity(const Vec2& x) const {
    const Vec2 g = gradient(x);
    return {-g.y(), g.x()};
}

Mat2 BumpStream::velocity_jacobian(const Vec2& x) const {
    const Mat2 h = hessian(x);
    Mat2 d;
    d << -h(1, 0), -h(1, 1),
          h(0, 0),  h(0, 1);
    return d;
}

Vec2 BumpStream::velocity_laplacian(const Vec2& x) const {
    const Vec2 g = gradient_of_laplacian(x);
    return {-g.y(), g.x()};
}

// ---------------------------------------------------------------------------
// VelocityField

VelocityField make_field(FieldKind kind, const FieldParameters& params) {
    if (kind == FieldKind::CompositeSum) {
        throw InvalidArgument("composite fields are built with make_composite");
    }
    if (!std::isfinite(params.modulation_amplitude) || !std::isfinite(params.modulation_frequency)) {
        throw InvalidArgument("time modulation parameters must be finite");
    }
    if (kind == FieldKind::RigidRotation && !std::isfinite(params.omega)) {
        throw InvalidArgument("rotation rate must be finite");
    }
    if (kind == FieldKind::Shear) {
        if (!params.shear.allFinite()) throw InvalidArgument("shear matrix must be finite");
        const double tr = params.shear.trace();
        if (std::abs(tr) > 1e-14 * (1.0 + params.shear.norm())) {
            std::ostringstream os;
            os << "shear matrix must be trace-free (trace = " << tr << ")";
            throw InvalidArgument(os.str());
        }
    }
    if (kind == FieldKind::StreamBump) {
        const BumpStream& b = params.bump;
        if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
            throw InvalidArgument("bump radius must be positive");
        }
        if (b.exponent < 2) throw InvalidArgument("bump exponent must be at least 2");
        if (!std::isfinite(b.amplitude) || !b.center.allFinite()) {
            throw InvalidArgument("bump amplitude and center must be finite");
        }
    }
    VelocityField f;
    f.kind_ = kind;
    f.params_ = params;
    return f;
}

VelocityField make_composite(std::vector<VelocityField> parts) {
    VelocityField f;
    f.kind_ = FieldKind::CompositeSum;
    f.parts_ = std::move(parts);
    return f;
}

double VelocityField::modulation(double t) const {
    return 1.0 + params_.modulation_amplitude * std::sin(params_.modulation_frequency * t);
}

double VelocityField::modulation_rate(double t) const {
    return params_.modulation_amplitude * params_.modulation_frequency
           * std::cos(params_.modulation_frequency * t);
}

Vec2 VelocityField::profile(const Vec2& x) const {
    switch (kind_) {
        case FieldKind::Zero: return Vec2::Zero();
        case FieldKind::RigidRotation: return params_.omega * Vec2(-x.y(), x.x());
        case FieldKind::Shear: return params_.shear * x;
        case FieldKind::StreamBump: return params_.bump.velocity(x);
        case FieldKind::CompositeSum: break;
    }
    return Vec2::Zero();
}

Mat2 VelocityField::profile_jacobian(const Vec2& x) const {
    switch (kind_) {
        case FieldKind::Zero: return Mat2::Zero();
        case FieldKind::RigidRotation: {
            Mat2 j;
            j << 0.0, -params_.omega, params_.omega, 0.0;
            return j;
        }
        case FieldKind::Shear: return params_.shear;
        case FieldKind::StreamBump: return params_.bump.velocity_jacobian(x);
        case FieldKind::CompositeSum: break;
    }
    return Mat2::Zero();
}

Vec2 VelocityField::value(double t, const Vec2& x) const {
    if (kind_ == FieldKind::CompositeSum) {
        Vec2 v = Vec2::Zero();
        for (const auto& p : parts_) v += p.value(t, x);
        return v;
    }
    return modulation(t) * profile(x);
}

Mat2 VelocityField::jacobian(double t, const Vec2& x) const {
    if (kind_ == FieldKind::CompositeSum) {
        Mat2 j = Mat2::Zero();
        for (const auto& p : parts_) j += p.jacobian(t, x);
        return j;
    }
    return modulation(t) * profile_jacobian(x);
}

Vec2 VelocityField::time_derivative(double t, const Vec2& x) const {
    if (kind_ == FieldKind::CompositeSum) {
        Vec2 v = Vec2::Zero();
        for (const auto& p : parts_) v += p.time_derivative(t, x);
        return v;
    }
    return modulation_rate(t) * profile(x);
}

bool VelocityField::is_zero() const {
    switch (kind_) {
        case FieldKind::Zero: return true;
        case FieldKind::RigidRotation: return params_.omega == 0.0;
        case FieldKind::Shear: return params_.shear.isZero(0.0);
        case FieldKind::StreamBump: return params_.bump.amplitude == 0.0;
        case FieldKind::CompositeSum:
            for (const auto& p : parts_) {
                if (!p.is_zero()) return false;
            }
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

void check_inside(const Vec2& x, double radius, double t, std::size_t index) {
    if (!(x.norm() <= radius)) {
        std::ostringstream os;
        os << "flow trajectory " << index << " left the hold-all disk of radius " << radius
           << " at t = " << t << " (|x| = " << x.norm() << ")";
        throw DomainEscapeError(os.str());
    }
}

void rk4_coupled(const VelocityField& w, double t0, double dt, Vec2& x, Mat2& jac) {
    const Vec2 kx1 = w.value(t0, x);
    const Mat2 kj1 = w.jacobian(t0, x) * jac;
    const Vec2 x2 = x + 0.5 * dt * kx1;
    const Mat2 j2 = jac + 0.5 * dt * kj1;
    const Vec2 kx2 = w.value(t0 + 0.5 * dt, x2);
    const Mat2 kj2 = w.jacobian(t0 + 0.5 * dt, x2) * j2;
    const Vec2 x3 = x + 0.5 * dt * kx2;
    const Mat2 j3 = jac + 0.5 * dt * kj2;
    const Vec2 kx3 = w.value(t0 + 0.5 * dt, x3);
    const Mat2 kj3 = w.jacobian(t0 + 0.5 * dt, x3) * j3;
    const Vec2 x4 = x + dt * kx3;
    const Mat2 j4 = jac + dt * kj3;
    const Vec2 kx4 = w.value(t0 + dt, x4);
    const Mat2 kj4 = w.jacobian(t0 + dt, x4) * j4;
    x += dt / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    jac += dt / 6.0 * (kj1 + 2.0 * kj2 + 2.0 * kj3 + kj4);
}

void rk4_position(const VelocityField& w, double t0, double dt, Vec2& x) {
    const Vec2 k1 = w.value(t0, x);
    const Vec2 k2 = w.value(t0 + 0.5 * dt, x + 0.5 * dt * k1);
    const Vec2 k3 = w.value(t0 + 0.5 * dt, x + 0.5 * dt * k2);
    const Vec2 k4 = w.value(t0 + dt, x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_substeps(int substeps) {
    if (substeps < 1) throw InvalidArgument("substeps must be at least 1");
}

}  // namespace

FlowMapSample advance_flowmap(const VelocityField& field, std::span<const Vec2> points,
                              double t, int substeps, double holdall_radius) {
    FlowMapSample start;
    start.t = 0.0;
    start.points.assign(points.begin(), points.end());
    start.phi = start.points;
    start.jac.assign(points.size(), Mat2::Identity());
    start.jac_dt.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        check_inside(points[i], holdall_radius, 0.0, i);
        start.jac_dt[i] = field.jacobian(0.0, points[i]);
    }
    return advance_flowmap(field, start, t, substeps, holdall_radius);
}

FlowMapSample advance_flowmap(const VelocityField& field, const FlowMapSample& from,
                              double t, int substeps, double holdall_radius) {
    check_substeps(substeps);
    FlowMapSample out = from;
    out.t = t;
    const double dt = (t - from.t) / substeps;
    const bool still = field.is_zero() || dt == 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        Vec2 x = out.phi[i];
        Mat2 j = out.jac[i];
        if (!still) {
            for (int s = 0; s < substeps; ++s) {
                rk4_coupled(field, from.t + s * dt, dt, x, j);
                check_inside(x, holdall_radius, from.t + (s + 1) * dt, i);
            }
        }
        out.phi[i] = x;
        out.jac[i] = j;
        out.jac_dt[i] = field.jacobian(t, x) * j;
    }
    return out;
}

std::vector<Vec2> inverse_map(const VelocityField& field, std::span<const Vec2> points,
                              double t, int substeps, double holdall_radius) {
    check_substeps(substeps);
    std::vector<Vec2> out(points.begin(), points.end());
    if (field.is_zero() || t == 0.0) return out;
    const double dt = -t / substeps;
    for (std::size_t i = 0; i < out.size(); ++i) {
        check_inside(out[i], holdall_radius, t, i);
        for (int s = 0; s < substeps; ++s) {
            rk4_position(field, t + s * dt, dt, out[i]);
            check_inside(out[i], holdall_radius, t + (s + 1) * dt, i);
        }
    }
    return out;
}

double det_deviation(const FlowMapSample& sample) {
    double dev = 0.0;
    for (const Mat2& j : sample.jac) dev = std::max(dev, std::abs(j.determinant() - 1.0));
    return dev;
}

// ---------------------------------------------------------------------------
// FlowMap

FlowMap::FlowMap(VelocityField field, double max_dt, double holdall_radius)
    : field_(std::move(field)), max_dt_(max_dt), holdall_radius_(holdall_radius) {
    if (!(max_dt > 0.0)) throw InvalidArgument("flow-map step must be positive");
    if (!(holdall_radius > 0.0)) throw InvalidArgument("hold-all radius must be positive");
}

int FlowMap::substeps_for(double t) const {
    return std::max(1, static_cast<int>(std::ceil(std::abs(t) / max_dt_ - 1e-9)));
}

FlowMapSample FlowMap::sample(std::span<const Vec2> reference_points, double t) const {
    return advance_flowmap(field_, reference_points, t, substeps_for(t), holdall_radius_);
}

FlowMapSample FlowMap::sample(const Vec2& reference_point, double t) const {
    return sample(std::span<const Vec2>(&reference_point, 1), t);
}

std::vector<Vec2> FlowMap::inverse(std::span<const Vec2> points, double t) const {
    return inverse_map(field_, points, t, substeps_for(t), holdall_radius_);
}

Vec2 FlowMap::inverse(const Vec2& point, double t) const {
    return inverse(std::span<const Vec2>(&point, 1), t).front();
}

}  // namespace mdflow
