#pragma once

// Closed-form divergence-free velocity fields and the flow map they generate.
//
// The flow map Phi_t solves d/dt Phi = w(t, Phi), Phi_0 = Id. Alongside the
// positions we integrate the variational equation d/dt DPhi = Dw(t, Phi) DPhi
// so that every sample carries DPhi_t and its time derivative.

#include "mdflow/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace mdflow {

inline constexpr double kDefaultHoldAllRadius = 4.0;

enum class FieldKind { Zero, RigidRotation, Shear, StreamBump, CompositeSum };

const char* to_string(FieldKind kind);

/// Stream function psi(x) = a (1 - |x - c|^2 / r^2)^k inside the disk of
/// radius r about c, zero outside. Its perpendicular gradient
/// (-d2 psi, d1 psi) is divergence-free and supported in the same disk.
struct BumpStream {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    double amplitude = 1.0;
    int exponent = 4;

    double psi(const Vec2& x) const;
    Vec2 gradient(const Vec2& x) const;
    Mat2 hessian(const Vec2& x) const;
    /// Gradient of the Laplacian of psi.
    Vec2 gradient_of_laplacian(const Vec2& x) const;

    /// u = (-d2 psi, d1 psi).
    Vec2 velocity(const Vec2& x) const;
    /// Du with (Du)_{ij} = d_j u_i.
    Mat2 velocity_jacobian(const Vec2& x) const;
    Vec2 velocity_laplacian(const Vec2& x) const;
};

struct FieldParameters {
    double omega = 0.0;               // rigid rotation rate [1/time]
    Mat2 shear = Mat2::Zero();        // w = A x, A trace-free [1/time]
    BumpStream bump{};                // stream-bump field
    double modulation_amplitude = 0.0;  // w(t,x) = (1 + eps sin(nu t)) w0(x)
    double modulation_frequency = 0.0;
};

/// Closed-form time-dependent velocity field with analytic Jacobian.
///
/// Every kind is divergence-free by construction: rotations are skew,
/// shears are trace-free, bumps are perpendicular gradients. A time
/// modulation factor multiplies the spatial profile.
class VelocityField {
public:
    VelocityField() = default;

    FieldKind kind() const { return kind_; }
    const FieldParameters& parameters() const { return params_; }
    const std::vector<VelocityField>& components() const { return parts_; }

    Vec2 value(double t, const Vec2& x) const;
    Mat2 jacobian(double t, const Vec2& x) const;
    Vec2 time_derivative(double t, const Vec2& x) const;
    double divergence(double t, const Vec2& x) const { return jacobian(t, x).trace(); }

    bool is_zero() const;

private:
    friend VelocityField make_field(FieldKind, const FieldParameters&);
    friend VelocityField make_composite(std::vector<VelocityField>);

    double modulation(double t) const;
    double modulation_rate(double t) const;
    Vec2 profile(const Vec2& x) const;
    Mat2 profile_jacobian(const Vec2& x) const;

    FieldKind kind_ = FieldKind::Zero;
    FieldParameters params_{};
    std::vector<VelocityField> parts_;
};

/// Validates parameters and builds a single-kind field. Composite fields
/// are built with make_composite.
VelocityField make_field(FieldKind kind, const FieldParameters& params = {});

/// Pointwise sum of fields.
VelocityField make_composite(std::vector<VelocityField> parts);

/// Flow-map data at time t for a set of reference points.
struct FlowMapSample {
    double t = 0.0;
    std::vector<Vec2> points;
    std::vector<Vec2> phi;
    std::vector<Mat2> jac;
    std::vector<Mat2> jac_dt;

    std::size_t size() const { return points.size(); }
};

/// Integrates the coupled (Phi, DPhi) system from 0 to t with `substeps`
/// fixed classical RK4 steps. Throws DomainEscapeError if a trajectory
/// leaves the hold-all disk.
FlowMapSample advance_flowmap(const VelocityField& field, std::span<const Vec2> points,
                              double t, int substeps,
                              double holdall_radius = kDefaultHoldAllRadius);

/// Continues an existing sample from `from.t` to t. The result refers to the
/// same reference points, so Phi and DPhi keep their meaning relative to t=0.
FlowMapSample advance_flowmap(const VelocityField& field, const FlowMapSample& from,
                              double t, int substeps,
                              double holdall_radius = kDefaultHoldAllRadius);

/// Phi_t^{-1}(points), by integrating the flow backward from t to 0.
std::vector<Vec2> inverse_map(const VelocityField& field, std::span<const Vec2> points,
                              double t, int substeps,
                              double holdall_radius = kDefaultHoldAllRadius);

/// max_i |det(jac_i) - 1|.
double det_deviation(const FlowMapSample& sample);

/// A velocity field bundled with a step-size policy. Used wherever the flow
/// map has to be evaluated lazily at arbitrary points and times.
class FlowMap {
public:
    explicit FlowMap(VelocityField field, double max_dt = 1e-3,
                     double holdall_radius = kDefaultHoldAllRadius);

    const VelocityField& field() const { return field_; }
    double max_dt() const { return max_dt_; }
    double holdall_radius() const { return holdall_radius_; }

    int substeps_for(double t) const;

    FlowMapSample sample(std::span<const Vec2> reference_points, double t) const;
    FlowMapSample sample(const Vec2& reference_point, double t) const;
    std::vector<Vec2> inverse(std::span<const Vec2> points, double t) const;
    Vec2 inverse(const Vec2& point, double t) const;

private:
    VelocityField field_;
    double max_dt_;
    double holdall_radius_;
};

}  // namespace mdflow
