#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "robokey/observer.hpp"
#include "robokey/rng.hpp"

using namespace robokey;

namespace {

ModelParams khepera() {
    ModelParams p;
    p.T = 0.2;
    p.r = 0.021;
    p.D = 0.1047;
    return p;
}

ModelParams noise_free() {
    ModelParams p = khepera();
    p.W.setZero();
    p.V.setZero();
    return p;
}

}  // namespace

TEST_CASE("linearization at a straight-line operating point") {
    const ModelParams p = khepera();
    const Linearization lin = linearize({0.4, -0.2, 0.0}, {1.0, 0.3}, p);
    Eigen::Matrix3d a_expected;
    a_expected << 1, 0, 0,
                  0, 1, 0.2,
                  0, 0, 1;
    CHECK((lin.A - a_expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    Eigen::Matrix<double, 3, 2> g_expected;
    g_expected << 0.2, 0,
                  0,   0,
                  0,   0.2;
    CHECK((lin.G - g_expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((lin.B - lin.G).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linearization at rest has identity state Jacobian") {
    const Linearization lin = linearize({0, 0, 1.2}, {0.0, 0.5}, khepera());
    CHECK((lin.A - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Jacobians match central finite differences") {
    const ModelParams p = khepera();
    RandomStream rng(31);
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const RobotState x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-4, 4)};
        const UnicycleInput u{rng.uniform(-0.5, 0.5), rng.uniform(-2, 2)};
        const Linearization lin = linearize(x, u, p);

        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d dx = Eigen::Vector3d::Zero();
            dx(j) = h;
            const Eigen::Vector3d fp =
                unicycle_step(RobotState::from_vec(x.vec() + dx), u, p, {}).vec();
            const Eigen::Vector3d fm =
                unicycle_step(RobotState::from_vec(x.vec() - dx), u, p, {}).vec();
            const Eigen::Vector3d col = (fp - fm) / (2 * h);
            CHECK((lin.A.col(j) - col).cwiseAbs().maxCoeff() <= 1e-6);
        }
        for (int j = 0; j < 2; ++j) {
            Eigen::Vector2d du = Eigen::Vector2d::Zero();
            du(j) = h;
            const Eigen::Vector3d fp =
                unicycle_step(x, UnicycleInput::from_vec(u.vec() + du), p, {}).vec();
            const Eigen::Vector3d fm =
                unicycle_step(x, UnicycleInput::from_vec(u.vec() - du), p, {}).vec();
            const Eigen::Vector3d col = (fp - fm) / (2 * h);
            CHECK((lin.B.col(j) - col).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("noise-free bias recovery is exact") {
    const ModelParams p = noise_free();
    for (const double sign : {1.0, -1.0}) {
        const Eigen::Vector2d bias(sign * 0.035, 0.0);
        RobotState x{0, 0, 0};
        ObserverState obs;  // x_hat = x, P = 0
        for (int k = 0; k < 200; ++k) {
            const UnicycleInput u{0.05 + 0.04 * std::sin(0.05 * k),
                                  0.3 * std::cos(0.08 * k)};
            const UnicycleInput applied{u.v + bias(0), u.omega + bias(1)};
            x = unicycle_step(x, applied, p, {});
            const UioResult res = uio_step(obs, u, {x.vec()}, p);
            obs = res.next;
            CHECK((res.delta_prev - bias).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK(std::abs(obs.x_hat.px - x.px) <= 1e-9);
            CHECK(std::abs(obs.x_hat.py - x.py) <= 1e-9);
            CHECK(std::abs(obs.x_hat.theta - x.theta) <= 1e-9);
        }
    }
}

TEST_CASE("zero bias, noise-free tracking is exact") {
    const ModelParams p = noise_free();
    RobotState x{0, 0, 0};
    ObserverState obs;
    for (int k = 0; k < 100; ++k) {
        const UnicycleInput u{0.08, 0.1 * std::sin(0.1 * k)};
        x = unicycle_step(x, u, p, {});
        const UioResult res = uio_step(obs, u, {x.vec()}, p);
        obs = res.next;
        CHECK(res.delta_prev.cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(std::abs(obs.x_hat.px - x.px) <= 1e-9);
    }
}

TEST_CASE("input estimator is unbiased by construction") {
    // M_k G_{k-1} = I whenever Xi G is invertible
    const ModelParams p = khepera();
    RandomStream rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const RobotState xh{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3)};
        const UnicycleInput u{rng.uniform(-0.3, 0.3), rng.uniform(-1, 1)};
        const Linearization lin = linearize(xh, u, p);
        Eigen::Matrix3d ps = Eigen::Matrix3d::Random();
        ps = (ps * ps.transpose()).eval();  // random PSD
        const Eigen::Matrix3d r_star = lin.A * ps * lin.A.transpose() + p.W + p.V;
        const Eigen::Matrix<double, 2, 3> xi = lin.G.transpose() * r_star.inverse();
        const Eigen::Matrix2d xig = xi * lin.G;
        const Eigen::Matrix<double, 2, 3> m = xig.inverse() * xi;
        CHECK((m * lin.G - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("covariance stays symmetric PSD under sustained noisy updates") {
    const ModelParams p = khepera();  // W = 1e-2 I, V = 1e-4 I
    RandomStream rng(23);
    CovarianceSampler wn(1e-6 * Eigen::Matrix3d::Identity());
    CovarianceSampler vn(1e-4 * Eigen::Matrix3d::Identity());
    RobotState x{0, 0, 0};
    ObserverState obs;
    double min_eig = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const UnicycleInput u{rng.uniform(-0.3, 0.3), rng.uniform(-1.5, 1.5)};
        NoiseDraw n;
        n.zeta = wn.sample(rng);
        x = unicycle_step(x, u, p, n);
        NoiseDraw m;
        m.xi = vn.sample(rng);
        const UioResult res = uio_step(obs, u, measure(x, p, m), p);
        obs = res.next;
        CHECK((obs.P - obs.P.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(obs.P);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    CHECK(min_eig >= -1e-10);
}

TEST_CASE("recursion is deterministic") {
    const ModelParams p = khepera();
    ObserverState obs;
    obs.x_hat = {0.1, 0.2, 0.3};
    obs.P = 1e-3 * Eigen::Matrix3d::Identity();
    const UnicycleInput u{0.07, -0.4};
    const Measurement y{Eigen::Vector3d(0.12, 0.21, 0.28)};
    const UioResult a = uio_step(obs, u, y, p);
    const UioResult b = uio_step(obs, u, y, p);
    CHECK(std::memcmp(&a.delta_prev, &b.delta_prev, sizeof(a.delta_prev)) == 0);
    CHECK(a.next.x_hat.px == b.next.x_hat.px);
    CHECK((a.next.P - b.next.P).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("singular innovation covariance is reported") {
    ModelParams p = khepera();
    p.W.setZero();
    p.V.setZero();
    ObserverState obs;
    // zero covariances are auto-regularized, so this must not throw
    CHECK_NOTHROW(uio_step(obs, {0.1, 0.0}, {Eigen::Vector3d::Zero()}, p));

    // a non-finite covariance can not be inverted
    ObserverState broken;
    broken.P = Eigen::Matrix3d::Constant(std::numeric_limits<double>::infinity());
    ModelParams pn = khepera();
    CHECK_THROWS_AS(uio_step(broken, {0.1, 0.0}, {Eigen::Vector3d::Zero()}, pn),
                    estimation_error);
}

TEST_CASE("wheel-space input estimate") {
    const ModelParams p = khepera();
    const DiffDriveInput up = estimate_input_dd({0.035, 0.0}, {0.1, 0.0}, p);
    CHECK(up.omega_r == doctest::Approx(6.428571428571429).epsilon(1e-12));
    CHECK(up.omega_l == doctest::Approx(6.428571428571429).epsilon(1e-12));

    const DiffDriveInput nominal = estimate_input_dd({0.0, 0.0}, {0.1, 0.0}, p);
    const DiffDriveInput direct = input_transform_inv({0.1, 0.0}, p);
    CHECK(nominal.omega_r == direct.omega_r);
    CHECK(nominal.omega_l == direct.omega_l);

    const DiffDriveInput down = estimate_input_dd({-0.035, 0.0}, {0.1, 0.0}, p);
    CHECK(down.omega_r == doctest::Approx(3.0952380952380953).epsilon(1e-12));
    CHECK(down.omega_l == doctest::Approx(3.0952380952380953).epsilon(1e-12));
}
