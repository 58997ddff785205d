#pragma once

// Pointwise Piola transforms between Omega_0 and Omega(t), the kernel of the
// transport form lambda, and the two material-derivative conventions.
//
// Two evaluation styles are offered. Batch functions take a FlowMapSample and
// return values at the sample's points (pull) or their images (push). Lazy
// functions take a FlowMap and return a PointwiseField that integrates the
// flow on demand, which is what finite-difference checks need.

#include "mdflow/flowmap.hpp"

#include <functional>
#include <mutex>
#include <optional>

namespace mdflow {

/// A vector field given by closed-form or composed evaluators.
struct PointwiseField {
    std::function<Vec2(const Vec2&)> value;
    std::function<Mat2(const Vec2&)> jacobian;  // may be empty
    double time = 0.0;

    Vec2 operator()(const Vec2& x) const { return value(x); }
    bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// (t, x) -> vector, used for time-indexed families u(t).
using TimeField = std::function<Vec2(double, const Vec2&)>;

PointwiseField make_pointwise(std::function<Vec2(const Vec2&)> value,
                              std::function<Mat2(const Vec2&)> jacobian = {},
                              double time = 0.0);

/// Perpendicular gradient of a bump stream function as a field on Omega_0.
PointwiseField bump_velocity(const BumpStream& stream, double time = 0.0);

/// The region a transform may be evaluated on, described in reference
/// coordinates. The reference domain is the disk |y - center| <= radius.
struct ReferenceDomain {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    double tolerance = 1e-9;

    bool contains(const Vec2& y) const { return (y - center).norm() <= radius + tolerance; }
};

enum class Direction { Push, Pull };

// --- batch evaluation -------------------------------------------------------

/// (DPhi_t u)(y) at every sample point y, i.e. phi_t u at Phi_t(y).
std::vector<Vec2> piola_push_values(const FlowMapSample& sample, const PointwiseField& u);

/// DPhi_t(y)^{-1} u~(Phi_t(y)) at every sample point y.
std::vector<Vec2> piola_pull_values(const FlowMapSample& sample, const PointwiseField& u_t);

/// Covariant transforms. Pull: DPhi_t^T v~(Phi_t(y)) at sample points.
/// Push: DPhi_t^{-T} v(y), the value of phi_{-t}^* v at Phi_t(y).
std::vector<Vec2> covariant_values(const FlowMapSample& sample, const PointwiseField& v,
                                   Direction direction);

// --- lazy fields -------------------------------------------------------------

/// phi_t u = (DPhi_t u) o Phi_t^{-1}. Throws DomainError when the preimage of
/// an evaluation point is outside the reference domain.
PointwiseField piola_push(const FlowMap& flow, double t, PointwiseField u,
                          ReferenceDomain domain = {});

/// phi_{-t} u~ = DPhi_t^{-1} u~ o Phi_t.
PointwiseField piola_pull(const FlowMap& flow, double t, PointwiseField u_t,
                          ReferenceDomain domain = {});

/// Covariant pull phi_t^* v~ = DPhi_t^T v~ o Phi_t, or covariant push
/// phi_{-t}^* v = (DPhi_t^{-T} v) o Phi_t^{-1}.
PointwiseField covariant_transform(const FlowMap& flow, double t, PointwiseField v,
                                   Direction direction, ReferenceDomain domain = {});

/// t -> phi_t u0 as a time-indexed family.
TimeField pushed_family(const FlowMap& flow, PointwiseField u0);

// --- transport kernel ----------------------------------------------------------

/// M = J^{-T} (J'^T J + J^T J') J^{-1} with J = DPhi_t, J' = d/dt DPhi_t.
Mat2 lambda_matrix(const Mat2& jac, const Mat2& jac_dt);

/// Pointwise kernel of the transport form at time t, evaluated at points of
/// Omega(t). Evaluations over a point set are cached per (t, point set).
class LambdaKernel {
public:
    LambdaKernel(FlowMap flow, double t);

    double time() const { return t_; }

    Mat2 operator()(const Vec2& x) const;
    std::vector<Mat2> evaluate(std::span<const Vec2> points) const;

    /// Kernel at the images of the sample's reference points.
    static std::vector<Mat2> at_sample(const FlowMapSample& sample);

private:
    FlowMap flow_;
    double t_;
    mutable std::mutex cache_mutex_;
    mutable std::size_t cache_key_ = 0;
    mutable std::vector<Vec2> cache_points_;
    mutable std::vector<Mat2> cache_values_;
};

LambdaKernel lambda_kernel(const VelocityField& field, double t, double max_dt = 1e-3,
                           double holdall_radius = kDefaultHoldAllRadius);

// --- material derivatives ------------------------------------------------------

enum class MaterialConvention { Phi, W };

/// Material derivative of the family u at time t by central differences of
/// the pulled-back trajectory:
///   Phi: phi_t d/dt (phi_{-t} u(t)),
///   W:   d/dt (u(t) o Phi_t) o Phi_t^{-1}.
/// Throws InvalidArgument if the stencil leaves [0, horizon].
PointwiseField material_derivative(const FlowMap& flow, TimeField u, double t,
                                   MaterialConvention convention, double fd_step,
                                   double horizon = std::numeric_limits<double>::infinity());

// --- finite-difference helpers ------------------------------------------------

/// Central-difference Jacobian (J_{ij} = d_j f_i).
Mat2 fd_jacobian(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double step);

/// Central-difference divergence.
double fd_divergence(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double step);

}  // namespace mdflow
