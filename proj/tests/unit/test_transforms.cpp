#include "mdflow/transforms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mdflow;

namespace {

std::vector<Vec2> random_disk_points(std::size_t n, double radius, unsigned seed,
                                     Vec2 center = Vec2::Zero()) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec2> pts;
    while (pts.size() < n) {
        Vec2 p(u(rng), u(rng));
        if (p.norm() < 1.0) pts.push_back(center + radius * p);
    }
    return pts;
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

VelocityField bump_field(Vec2 center = Vec2::Zero(), double radius = 1.0, double amp = 1.0) {
    FieldParameters p;
    p.bump = BumpStream{center, radius, amp, 4};
    return make_field(FieldKind::StreamBump, p);
}

PointwiseField constant(Vec2 c) {
    return make_pointwise([c](const Vec2&) { return c; });
}

// A smooth, non-solenoidal test field used where divergence does not matter.
PointwiseField wavy() {
    return make_pointwise([](const Vec2& x) {
        return Vec2(std::sin(x.x() + 2 * x.y()), std::cos(x.x() * x.y()) + x.x());
    });
}

// Degree-n Gauss-Legendre nodes on [0,1] by Newton iteration.
std::vector<std::pair<double, double>> gauss01(int n) {
    std::vector<std::pair<double, double>> out;
    for (int i = 1; i <= n; ++i) {
        double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        out.emplace_back(0.5 * (x + 1), 1.0 / ((1 - x * x) * dp * dp));
    }
    return out;
}

}  // namespace

TEST(PiolaPush, TimeZeroIsIdentity) {
    FlowMap flow(bump_field());
    auto u = wavy();
    auto pushed = piola_push(flow, 0.0, u);
    for (const auto& x : random_disk_points(20, 0.9, 1)) EXPECT_EQ(pushed(x), u(x));
}

TEST(PiolaPush, QuarterRotationOfConstantField) {
    FlowMap flow(rotation_field(1.0));
    auto pushed = piola_push(flow, std::numbers::pi / 2, constant(Vec2(1.0, 0.0)));
    for (const auto& x : random_disk_points(20, 0.9, 2)) {
        EXPECT_LE((pushed(x) - Vec2(0.0, 1.0)).norm(), 1e-10);
    }
}

TEST(PiolaPush, UnitShearOfVerticalField) {
    FlowMap flow(unit_shear());
    auto pushed = piola_push(flow, 1.0, constant(Vec2(0.0, 1.0)));
    // Points of Phi_1(unit disk): images of reference points.
    for (const auto& y : random_disk_points(20, 0.9, 3)) {
        Vec2 x(y.x() + y.y(), y.y());
        EXPECT_LE((pushed(x) - Vec2(1.0, 1.0)).norm(), 1e-12);
    }
}

TEST(PiolaPush, OutsideImageIsDomainError) {
    FlowMap flow(unit_shear());
    auto pushed = piola_push(flow, 1.0, constant(Vec2(0.0, 1.0)));
    EXPECT_THROW(pushed(Vec2(0.0, 1.5)), DomainError);
}

TEST(PiolaPull, TimeZeroIsIdentity) {
    FlowMap flow(bump_field());
    auto u = wavy();
    auto pulled = piola_pull(flow, 0.0, u);
    for (const auto& y : random_disk_points(20, 0.9, 4)) EXPECT_EQ(pulled(y), u(y));
}

TEST(PiolaPull, QuarterRotationBack) {
    FlowMap flow(rotation_field(1.0));
    auto pulled = piola_pull(flow, std::numbers::pi / 2, constant(Vec2(0.0, 1.0)));
    for (const auto& y : random_disk_points(20, 0.9, 5)) {
        EXPECT_LE((pulled(y) - Vec2(1.0, 0.0)).norm(), 1e-10);
    }
}

TEST(PiolaPull, PushThenPullIsIdentity) {
    FlowMap flow(bump_field(Vec2(0.1, 0.0), 0.9, 0.8));
    auto u0 = bump_velocity(BumpStream{Vec2(-0.2, 0.1), 0.6, 1.0, 4});
    const double t = 0.7;
    auto round_trip = piola_pull(flow, t, piola_push(flow, t, u0));
    double err = 0.0;
    for (const auto& y : random_disk_points(200, 0.95, 6)) err = std::max(err, (round_trip(y) - u0(y)).norm());
    EXPECT_LE(err, 1e-8);
}

TEST(PiolaBatch, AgreesWithLazyEvaluation) {
    FlowMap flow(bump_field(Vec2(0.0, 0.1), 0.8, 1.2));
    auto u0 = wavy();
    auto pts = random_disk_points(30, 0.9, 7);
    auto sample = flow.sample(pts, 0.5);
    auto batch = piola_push_values(sample, u0);
    auto lazy = piola_push(flow, 0.5, u0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_LE((batch[i] - lazy(sample.phi[i])).norm(), 1e-9);
    }
    auto pulled = piola_pull_values(sample, u0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_LE((sample.jac[i] * pulled[i] - u0(sample.phi[i])).norm(), 1e-13);
    }
}

TEST(CovariantTransform, TimeZeroIsIdentity) {
    FlowMap flow(unit_shear());
    auto v = wavy();
    for (auto dir : {Direction::Push, Direction::Pull}) {
        auto c = covariant_transform(flow, 0.0, v, dir);
        for (const auto& x : random_disk_points(10, 0.9, 8)) EXPECT_EQ(c(x), v(x));
    }
}

TEST(CovariantTransform, CoincidesWithContravariantForRotations) {
    FlowMap flow(rotation_field(0.8));
    auto v = wavy();
    const double t = 0.9;
    auto co_push = covariant_transform(flow, t, v, Direction::Push);
    auto contra_push = piola_push(flow, t, v);
    auto co_pull = covariant_transform(flow, t, v, Direction::Pull);
    auto contra_pull = piola_pull(flow, t, v);
    double diff = 0.0;
    for (const auto& x : random_disk_points(50, 0.9, 9)) {
        diff = std::max(diff, (co_push(x) - contra_push(x)).norm());
        diff = std::max(diff, (co_pull(x) - contra_pull(x)).norm());
    }
    EXPECT_LE(diff, 1e-10);
}

TEST(CovariantTransform, DualToContravariantPush) {
    // int_{Omega(t)} (phi_t u) . eta~ = int_{Omega_0} u . (phi_t^* eta~), with the
    // left side evaluated in reference coordinates by change of variables.
    FlowMap flow(bump_field(Vec2(0.0, 0.0), 1.0, 1.0));
    const double t = 0.6;
    auto u = wavy();
    auto eta = make_pointwise([](const Vec2& x) { return Vec2(x.y() * x.y() + 1.0, std::exp(x.x())); });
    auto gauss = gauss01(12);
    std::vector<Vec2> pts;
    std::vector<double> wts;
    for (auto [r, wr] : gauss) {
        for (int k = 0; k < 48; ++k) {
            double a = 2 * std::numbers::pi * k / 48;
            pts.emplace_back(r * std::cos(a), r * std::sin(a));
            wts.push_back(wr * r * 2 * std::numbers::pi / 48);
        }
    }
    auto sample = flow.sample(pts, t);
    auto pushed = piola_push_values(sample, u);
    auto co = covariant_values(sample, eta, Direction::Pull);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        lhs += wts[i] * pushed[i].dot(eta(sample.phi[i])) * sample.jac[i].determinant();
        rhs += wts[i] * u(pts[i]).dot(co[i]);
    }
    EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::abs(rhs));
}

TEST(DivergencePreservation, PushAndPullOfSolenoidalFields) {
    auto u0 = bump_velocity(BumpStream{Vec2(0.1, -0.1), 0.8, 1.0, 4});
    for (const auto& w : {rotation_field(1.0), unit_shear(), bump_field(Vec2(0, 0), 1.0, 0.5)}) {
        FlowMap flow(w);
        for (double t : {0.1, 0.5, 1.0}) {
            auto pushed = piola_push(flow, t, u0);
            auto ref = random_disk_points(25, 0.8, 10);
            auto sample = flow.sample(ref, t);
            double worst = 0.0;
            for (const auto& x : sample.phi) worst = std::max(worst, std::abs(fd_divergence(pushed.value, x, 1e-4)));
            EXPECT_LE(worst, 1e-5) << to_string(w.kind()) << " t=" << t;

            // u~ centred inside Omega(t); pulled back and checked on Omega_0.
            auto ut = bump_velocity(BumpStream{sample.phi[0] * 0.0, 0.5, 1.0, 4});
            auto pulled = piola_pull(flow, t, ut);
            worst = 0.0;
            for (const auto& y : ref) worst = std::max(worst, std::abs(fd_divergence(pulled.value, y, 1e-4)));
            EXPECT_LE(worst, 1e-5) << to_string(w.kind()) << " t=" << t;
        }
    }
}

TEST(LambdaKernel, VanishesForRigidRotation) {
    auto k = lambda_kernel(rotation_field(1.7), 0.8);
    for (const auto& x : random_disk_points(30, 0.9, 11)) EXPECT_LE(k(x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LambdaKernel, ConstantForUnitShear) {
    Mat2 expected;
    expected << 0.0, 1.0, 1.0, 0.0;
    for (double t : {0.0, 0.3, 1.0, 2.0}) {
        auto k = lambda_kernel(unit_shear(), t, 1e-3, 10.0);
        for (const auto& y : random_disk_points(10, 0.9, 12)) {
            Vec2 x(y.x() + t * y.y(), y.y());
            EXPECT_LE((k(x) - expected).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(LambdaKernel, ZeroField) {
    auto k = lambda_kernel(make_field(FieldKind::Zero), 0.5);
    EXPECT_EQ(k(Vec2(0.3, 0.2)), Mat2::Zero());
}

TEST(LambdaKernel, SymmetricAndEqualToSymmetricVelocityGradient) {
    // Independent route: J' J^{-1} = Dw(t, Phi_t), so M = Dw + Dw^T at x.
    auto w = make_composite({bump_field(Vec2(0.1, 0.0), 0.9, 1.0), unit_shear()});
    const double t = 0.5;
    auto k = lambda_kernel(w, t, 1e-3, 10.0);
    auto ref = random_disk_points(40, 0.9, 13);
    FlowMap flow(w, 1e-3, 10.0);
    auto sample = flow.sample(ref, t);
    auto batch = k.evaluate(sample.phi);
    auto again = k.evaluate(sample.phi);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const Mat2& m = batch[i];
        EXPECT_EQ(m, m.transpose());
        EXPECT_EQ(m, again[i]);
        const Mat2 dw = w.jacobian(t, sample.phi[i]);
        EXPECT_LE((m - (dw + dw.transpose())).norm(), 1e-8);
    }
}

TEST(MaterialDerivative, PushedFamilyHasZeroPhiDerivative) {
    FlowMap flow(bump_field(Vec2(0.0, 0.0), 1.0, 1.0));
    auto u0 = bump_velocity(BumpStream{Vec2(0.2, 0.0), 0.6, 1.0, 4});
    auto family = pushed_family(flow, u0);
    auto ref = random_disk_points(10, 0.8, 14);
    auto img = flow.sample(ref, 0.5).phi;
    double prev = 0.0;
    for (double step : {1e-2, 5e-3}) {
        auto d = material_derivative(flow, family, 0.5, MaterialConvention::Phi, step);
        double worst = 0.0;
        for (const auto& x : img) worst = std::max(worst, d(x).norm());
        EXPECT_LE(worst, 1e-6);
        if (prev > 1e-9) EXPECT_LE(worst, prev);  // O(step^2) unless already at roundoff
        prev = worst;
    }
}

TEST(MaterialDerivative, StaticFieldUnderZeroFlow) {
    FlowMap flow(make_field(FieldKind::Zero));
    TimeField u = [](double, const Vec2& x) { return Vec2(x.x() * x.y(), std::sin(x.x())); };
    for (auto conv : {MaterialConvention::Phi, MaterialConvention::W}) {
        auto d = material_derivative(flow, u, 0.5, conv, 1e-4);
        for (const auto& x : random_disk_points(10, 0.9, 15)) EXPECT_LE(d(x).norm(), 1e-10);
    }
}

TEST(MaterialDerivative, ConventionDifferenceMatchesAnalyticTerm) {
    auto w = bump_field(Vec2(0.1, 0.0), 0.9, 1.2);
    FlowMap flow(w);
    TimeField u = [](double t, const Vec2& x) {
        return Vec2(std::sin(x.x() + t), std::cos(2 * x.y()) * (1 + t));
    };
    const double t = 0.4;
    auto dphi = material_derivative(flow, u, t, MaterialConvention::Phi, 1e-4);
    auto dw = material_derivative(flow, u, t, MaterialConvention::W, 1e-4);
    auto ref = random_disk_points(20, 0.7, 16);
    auto sample = flow.sample(ref, t);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const Vec2& x = sample.phi[i];
        // DPhi d/dt(DPhi^{-1}) = -J' J^{-1}.
        const Mat2 term = -sample.jac_dt[i] * sample.jac[i].inverse();
        const Vec2 expected = term * u(t, x);
        const Vec2 got = dphi(x) - dw(x);
        EXPECT_LE((got - expected).norm(), 1e-5 * std::max(1.0, expected.norm()));
    }
}

TEST(MaterialDerivative, StencilOutsideIntervalRejected) {
    FlowMap flow(rotation_field(1.0));
    TimeField u = [](double, const Vec2& x) { return x; };
    EXPECT_THROW(material_derivative(flow, u, 1e-5, MaterialConvention::W, 1e-4), InvalidArgument);
    EXPECT_THROW(material_derivative(flow, u, 1.0, MaterialConvention::W, 1e-2, 1.0), InvalidArgument);
}
