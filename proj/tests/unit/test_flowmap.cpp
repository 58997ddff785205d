#include "mdflow/flowmap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mdflow;

namespace {

std::vector<Vec2> random_disk_points(std::size_t n, double radius, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec2> pts;
    while (pts.size() < n) {
        Vec2 p(u(rng), u(rng));
        if (p.norm() < 1.0) pts.push_back(radius * p);
    }
    return pts;
}

Mat2 rotation(double a) {
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

VelocityField rotation_field(double omega) {
    FieldParameters p;
    p.omega = omega;
    return make_field(FieldKind::RigidRotation, p);
}

VelocityField unit_shear() {
    FieldParameters p;
    p.shear << 0.0, 1.0, 0.0, 0.0;
    return make_field(FieldKind::Shear, p);
}

VelocityField bump_field(Vec2 center = Vec2::Zero(), double radius = 1.0, double amp = 1.0,
                         int exponent = 4) {
    FieldParameters p;
    p.bump = BumpStream{center, radius, amp, exponent};
    return make_field(FieldKind::StreamBump, p);
}

std::vector<VelocityField> all_kinds() {
    FieldParameters mod;
    mod.omega = 0.7;
    mod.modulation_amplitude = 0.3;
    mod.modulation_frequency = 2.0;
    return {make_field(FieldKind::Zero), rotation_field(1.3), unit_shear(),
            bump_field(Vec2(0.1, -0.2), 0.8, 0.5),
            make_field(FieldKind::RigidRotation, mod),
            make_composite({rotation_field(0.5), bump_field(Vec2(0.2, 0.1), 0.6, 0.3)})};
}

}  // namespace

TEST(VelocityField, ZeroFieldVanishes) {
    auto w = make_field(FieldKind::Zero);
    EXPECT_EQ(w.value(0.3, Vec2(0.2, -0.4)), Vec2::Zero());
    EXPECT_TRUE(w.is_zero());
}

TEST(VelocityField, RigidRotationValue) {
    auto w = rotation_field(1.0);
    Vec2 v = w.value(0.0, Vec2(1.0, 0.0));
    EXPECT_DOUBLE_EQ(v.x(), 0.0);
    EXPECT_DOUBLE_EQ(v.y(), 1.0);
}

TEST(VelocityField, StreamBumpSpotValue) {
    // psi = (1-|x|^2)^2, w = grad-perp psi, d_i psi = -4 x_i (1-|x|^2).
    auto w = bump_field(Vec2::Zero(), 1.0, 1.0, 2);
    Vec2 v = w.value(0.0, Vec2(0.5, 0.0));
    EXPECT_NEAR(v.x(), 0.0, 1e-15);
    EXPECT_NEAR(v.y(), -1.5, 1e-15);
}

TEST(VelocityField, RejectsInvalidParameters) {
    FieldParameters p;
    p.shear << 1.0, 0.0, 0.0, 0.5;
    EXPECT_THROW(make_field(FieldKind::Shear, p), InvalidArgument);
    FieldParameters b;
    b.bump.radius = 0.0;
    EXPECT_THROW(make_field(FieldKind::StreamBump, b), InvalidArgument);
    b.bump.radius = -1.0;
    EXPECT_THROW(make_field(FieldKind::StreamBump, b), InvalidArgument);
}

TEST(VelocityField, DivergenceFreeEverywhere) {
    auto pts = random_disk_points(200, 1.2, 7);
    for (const auto& w : all_kinds()) {
        for (const auto& x : pts) {
            for (double t : {0.0, 0.37, 1.0}) EXPECT_LE(std::abs(w.divergence(t, x)), 1e-14);
        }
    }
}

TEST(VelocityField, AnalyticDerivativesMatchFiniteDifferences) {
    auto pts = random_disk_points(50, 0.9, 11);
    const double h = 1e-6;
    for (const auto& w : all_kinds()) {
        for (const auto& x : pts) {
            const double t = 0.4;
            Mat2 fd;
            for (int k = 0; k < 2; ++k) {
                Vec2 e = Vec2::Zero();
                e[k] = h;
                fd.col(k) = (w.value(t, x + e) - w.value(t, x - e)) / (2 * h);
            }
            EXPECT_LE((fd - w.jacobian(t, x)).norm(), 1e-7 * (1.0 + fd.norm()));
            Vec2 fdt = (w.value(t + h, x) - w.value(t - h, x)) / (2 * h);
            EXPECT_LE((fdt - w.time_derivative(t, x)).norm(), 1e-7 * (1.0 + fdt.norm()));
        }
    }
}

TEST(BumpStream, HigherDerivativesMatchFiniteDifferences) {
    BumpStream s{Vec2(0.2, -0.1), 0.7, 1.3, 4};
    auto pts = random_disk_points(40, 0.6, 3);
    const double h = 1e-5;
    for (Vec2 x : pts) {
        x += s.center;
        Mat2 hess_fd;
        Vec2 lap_grad_fd;
        Vec2 vel_lap_fd = Vec2::Zero();
        for (int k = 0; k < 2; ++k) {
            Vec2 e = Vec2::Zero();
            e[k] = h;
            hess_fd.col(k) = (s.gradient(x + e) - s.gradient(x - e)) / (2 * h);
            lap_grad_fd[k] = (s.hessian(x + e).trace() - s.hessian(x - e).trace()) / (2 * h);
            vel_lap_fd += (s.velocity(x + e) - 2 * s.velocity(x) + s.velocity(x - e)) / (h * h);
        }
        EXPECT_LE((hess_fd - s.hessian(x)).norm(), 1e-7 * (1.0 + hess_fd.norm()));
        EXPECT_LE((lap_grad_fd - s.gradient_of_laplacian(x)).norm(),
                  1e-6 * (1.0 + lap_grad_fd.norm()));
        EXPECT_LE((vel_lap_fd - s.velocity_laplacian(x)).norm(), 1e-3 * (1.0 + vel_lap_fd.norm()));
    }
}

TEST(BumpStream, VanishesWithFirstDerivativesOutsideSupport) {
    auto w = bump_field(Vec2(0.1, 0.1), 0.5, 2.0, 3);
    for (double a = 0; a < 2 * std::numbers::pi; a += 0.1) {
        for (double r : {0.5, 0.6, 1.5}) {
            Vec2 x = Vec2(0.1, 0.1) + r * Vec2(std::cos(a), std::sin(a));
            EXPECT_LE(w.value(0.0, x).norm(), 1e-12);
            EXPECT_LE(w.jacobian(0.0, x).norm(), 1e-12);
        }
    }
}

TEST(AdvanceFlowmap, ZeroFieldIsIdentity) {
    auto pts = random_disk_points(20, 1.0, 1);
    auto s = advance_flowmap(make_field(FieldKind::Zero), pts, 0.8, 10);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(s.phi[i], pts[i]);
        EXPECT_EQ(s.jac[i], Mat2::Identity());
    }
}

TEST(AdvanceFlowmap, RotationMatchesClosedForm) {
    std::vector<Vec2> p{Vec2(1.0, 0.0)};
    auto s = advance_flowmap(rotation_field(1.0), p, 1.0, 1000);
    EXPECT_NEAR(s.phi[0].x(), std::cos(1.0), 1e-12);
    EXPECT_NEAR(s.phi[0].y(), std::sin(1.0), 1e-12);
    EXPECT_LE((s.jac[0] - rotation(1.0)).norm(), 1e-12);
}

TEST(AdvanceFlowmap, NilpotentShearMatchesMatrixExponential) {
    std::vector<Vec2> p{Vec2(1.0, 1.0)};
    auto s = advance_flowmap(unit_shear(), p, 1.0, 1000);
    EXPECT_NEAR(s.phi[0].x(), 2.0, 1e-12);
    EXPECT_NEAR(s.phi[0].y(), 1.0, 1e-12);
    Mat2 expected;
    expected << 1.0, 1.0, 0.0, 1.0;
    EXPECT_LE((s.jac[0] - expected).norm(), 1e-12);
}

TEST(AdvanceFlowmap, JacobianTimeDerivativeIsDwTimesJacobian) {
    auto w = bump_field(Vec2(0.0, 0.0), 1.0, 0.8);
    auto pts = random_disk_points(30, 0.9, 5);
    auto s = advance_flowmap(w, pts, 0.6, 600);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(s.jac_dt[i], (w.jacobian(0.6, s.phi[i]) * s.jac[i]).eval());
    }
}

TEST(AdvanceFlowmap, ContinuationMatchesSingleIntegration) {
    auto w = bump_field(Vec2(0.1, 0.0), 0.9, 0.7);
    auto pts = random_disk_points(25, 0.95, 9);
    auto once = advance_flowmap(w, pts, 0.5, 500);
    auto half = advance_flowmap(w, pts, 0.25, 250);
    auto twice = advance_flowmap(w, half, 0.5, 250);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_LE((once.phi[i] - twice.phi[i]).norm(), 1e-14);
        EXPECT_LE((once.jac[i] - twice.jac[i]).norm(), 1e-13);
    }
}

TEST(AdvanceFlowmap, EscapeIsAnError) {
    std::vector<Vec2> p{Vec2(1.0, 1.0)};
    EXPECT_THROW(advance_flowmap(unit_shear(), p, 5.0, 100, 3.0), DomainEscapeError);
    EXPECT_THROW(advance_flowmap(unit_shear(), p, 0.0, 1, 1.0), DomainEscapeError);
    EXPECT_THROW(advance_flowmap(unit_shear(), p, 1.0, 0), InvalidArgument);
}

TEST(AdvanceFlowmap, JacobianMatchesSpatialFiniteDifferences) {
    auto pts = random_disk_points(20, 0.85, 21);
    const double h = 1e-5;
    for (const auto& w : all_kinds()) {
        for (const auto& x : pts) {
            std::vector<Vec2> stencil{x, x + Vec2(h, 0), x - Vec2(h, 0), x + Vec2(0, h),
                                      x - Vec2(0, h)};
            auto s = advance_flowmap(w, stencil, 0.7, 700);
            Mat2 fd;
            fd.col(0) = (s.phi[1] - s.phi[2]) / (2 * h);
            fd.col(1) = (s.phi[3] - s.phi[4]) / (2 * h);
            EXPECT_LE((fd - s.jac[0]).norm() / s.jac[0].norm(), 1e-6);
        }
    }
}

TEST(AdvanceFlowmap, PointsOutsideBumpSupportNeverMove) {
    auto w = bump_field(Vec2(0.2, 0.0), 0.5, 3.0);
    std::vector<Vec2> outside{Vec2(-0.5, 0.0), Vec2(0.2, 0.8), Vec2(0.9, -0.3)};
    auto s = advance_flowmap(w, outside, 1.0, 200);
    for (std::size_t i = 0; i < outside.size(); ++i) {
        EXPECT_EQ(s.phi[i], outside[i]);
        EXPECT_EQ(s.jac[i], Mat2::Identity());
    }
}

TEST(InverseMap, ZeroFieldIsIdentity) {
    auto pts = random_disk_points(10, 1.0, 2);
    auto back = inverse_map(make_field(FieldKind::Zero), pts, 0.5, 10);
    EXPECT_EQ(back, pts);
}

TEST(InverseMap, RotationQuarterTurn) {
    std::vector<Vec2> p{Vec2(0.0, 1.0)};
    auto back = inverse_map(rotation_field(1.0), p, std::numbers::pi / 2, 2000);
    EXPECT_NEAR(back[0].x(), 1.0, 1e-12);
    EXPECT_NEAR(back[0].y(), 0.0, 1e-12);
}

TEST(InverseMap, RoundTripIsIdentity) {
    auto pts = random_disk_points(100, 1.0, 4);
    for (const auto& w : all_kinds()) {
        auto fwd = advance_flowmap(w, pts, 1.0, 1000);
        auto back = inverse_map(w, fwd.phi, 1.0, 1000);
        double err = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) err = std::max(err, (back[i] - pts[i]).norm());
        EXPECT_LE(err, 1e-8);
    }
}

TEST(DetDeviation, IdentitySampleIsZero) {
    auto pts = random_disk_points(5, 1.0, 8);
    auto s = advance_flowmap(make_field(FieldKind::Zero), pts, 0.0, 1);
    EXPECT_EQ(det_deviation(s), 0.0);
}

TEST(DetDeviation, RotationIsUnimodular) {
    auto pts = random_disk_points(50, 1.0, 8);
    auto s = advance_flowmap(rotation_field(2.0), pts, 1.7, 2000);
    EXPECT_LE(det_deviation(s), 1e-12);
}

TEST(DetDeviation, StreamBumpAtFineStep) {
    auto pts = random_disk_points(200, 1.0, 12);
    auto s = advance_flowmap(bump_field(Vec2::Zero(), 1.0, 1.0), pts, 1.0, 1000);
    EXPECT_LE(det_deviation(s), 1e-8);
}

TEST(DetDeviation, FourthOrderUnderStepHalving) {
    // Coarse steps so the integrator error dominates roundoff.
    auto pts = random_disk_points(50, 0.9, 13);
    auto w = bump_field(Vec2(0.1, 0.0), 0.9, 1.5);
    const double d1 = det_deviation(advance_flowmap(w, pts, 1.0, 10));
    const double d2 = det_deviation(advance_flowmap(w, pts, 1.0, 20));
    const double d3 = det_deviation(advance_flowmap(w, pts, 1.0, 40));
    EXPECT_GT(d1, 1e-10);
    EXPECT_GE(std::log2(d2 / d3), 3.5);
    // C dt^4 bound with C from the coarser pair.
    const double c = d2 / std::pow(1.0 / 20, 4);
    EXPECT_LE(d3, 1.1 * c * std::pow(1.0 / 40, 4));
}

TEST(FlowMap, LazyEvaluationMatchesBatch) {
    FlowMap flow(bump_field(), 1e-3);
    Vec2 y(0.3, -0.2);
    auto s = flow.sample(y, 0.4);
    EXPECT_EQ(flow.substeps_for(0.4), 400);
    Vec2 back = flow.inverse(s.phi[0], 0.4);
    EXPECT_LE((back - y).norm(), 1e-10);
}
