#include "robokey/observer.hpp"

#include <cmath>

namespace robokey {

namespace {

constexpr double kRegularization = 1e-12;

Eigen::Matrix3d invert_innovation(const Eigen::Matrix3d& m, bool regularize) {
    Eigen::Matrix3d s = m;
    if (regularize) s += kRegularization * Eigen::Matrix3d::Identity();
    Eigen::FullPivLU<Eigen::Matrix3d> lu(s);
    if (!lu.isInvertible()) {
        throw estimation_error("ill-conditioned innovation covariance");
    }
    return lu.inverse();
}

}  // namespace

Linearization linearize(const RobotState& x_hat, const UnicycleInput& u,
                        const ModelParams& p) {
    const double c = std::cos(x_hat.theta);
    const double s = std::sin(x_hat.theta);
    Linearization lin;
    lin.A << 1.0, 0.0, -p.T * u.v * s,
             0.0, 1.0,  p.T * u.v * c,
             0.0, 0.0,  1.0;
    lin.B << p.T * c, 0.0,
             p.T * s, 0.0,
             0.0,     p.T;
    lin.G = lin.B;
    return lin;
}

UioResult uio_step(const ObserverState& obs, const UnicycleInput& u_prev,
                   const Measurement& y, const ModelParams& p) {
    const Linearization lin = linearize(obs.x_hat, u_prev, p);
    const Eigen::Matrix3d& A = lin.A;
    const Eigen::Matrix<double, 3, 2>& G = lin.G;
    const Eigen::Matrix3d& W = p.W;
    const Eigen::Matrix3d& V = p.V;
    const bool regularize = W.isZero(0.0) && V.isZero(0.0);

    // Input estimation
    const Eigen::Matrix3d P_prop = A * obs.P * A.transpose() + W;
    const Eigen::Matrix3d R_star_inv = invert_innovation(P_prop + V, regularize);
    const Eigen::Matrix<double, 2, 3> Xi = G.transpose() * R_star_inv;
    const Eigen::Matrix2d XiG = Xi * G;
    Eigen::FullPivLU<Eigen::Matrix2d> xig_lu(XiG);
    if (!xig_lu.isInvertible()) {
        throw estimation_error("input not identifiable at current linearization");
    }
    const Eigen::Matrix<double, 2, 3> M = xig_lu.inverse() * Xi;
    const RobotState pred_nominal = unicycle_step(obs.x_hat, u_prev, p, NoiseDraw{});
    const Eigen::Vector2d delta_prev = M * (y.y - pred_nominal.vec());
    const Eigen::Matrix2d input_cov =
        M * (P_prop + V) * M.transpose();

    // State prediction, re-propagating with the bias-corrected input
    const UnicycleInput u_corrected{u_prev.v + delta_prev(0), u_prev.omega + delta_prev(1)};
    const RobotState x_pred = unicycle_step(obs.x_hat, u_corrected, p, NoiseDraw{});
    const Eigen::Matrix3d Phi = Eigen::Matrix3d::Identity() - G * M;
    const Eigen::Matrix3d A_bar = Phi * A;
    const Eigen::Matrix3d Q_bar =
        Phi * W * Phi.transpose() + G * M * V * M.transpose() * G.transpose();
    const Eigen::Matrix3d P_pred = A_bar * obs.P * A_bar.transpose() + Q_bar;

    // State estimation; the measurement map is the identity
    const Eigen::Matrix3d Gamma = G * M;
    const Eigen::Matrix3d R_tilde =
        P_pred + V + Gamma * V + V * Gamma.transpose();
    const Eigen::Matrix3d R_tilde_inv = invert_innovation(R_tilde, regularize);
    const Eigen::Matrix3d L =
        (P_pred + V * M.transpose() * G.transpose()).transpose() * R_tilde_inv;
    const Eigen::Vector3d innovation = y.y - x_pred.vec();
    const RobotState x_new = RobotState::from_vec(x_pred.vec() + L * innovation);
    const Eigen::Matrix3d Psi = Eigen::Matrix3d::Identity() - L;
    Eigen::Matrix3d P_new = Psi * P_pred * Psi.transpose() + L * V * L.transpose()
        - Psi * Gamma * V * L.transpose()
        - L * V * M.transpose() * G.transpose() * Psi.transpose();
    P_new = 0.5 * (P_new + P_new.transpose());

    UioResult out;
    out.next = ObserverState{x_new, P_new, delta_prev};
    out.delta_prev = delta_prev;
    out.x_hat = x_new;
    out.input_cov = input_cov;
    return out;
}

DiffDriveInput estimate_input_dd(const Eigen::Vector2d& delta_hat,
                                 const UnicycleInput& u_prev,
                                 const ModelParams& p) {
    return input_transform_inv(
        UnicycleInput{u_prev.v + delta_hat(0), u_prev.omega + delta_hat(1)}, p);
}

}  // namespace robokey
