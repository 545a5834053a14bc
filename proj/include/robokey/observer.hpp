#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "robokey/models.hpp"

namespace robokey {

class estimation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Recursion state of the unknown-input observer.
struct ObserverState {
    RobotState x_hat;
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
    Eigen::Vector2d delta_hat = Eigen::Vector2d::Zero();  // last input-bias estimate
};

/// Jacobians of the unicycle step about an estimate/input pair. The bias
/// enters the dynamics exactly like the input, so G equals B.
struct Linearization {
    Eigen::Matrix3d A;
    Eigen::Matrix<double, 3, 2> B;
    Eigen::Matrix<double, 3, 2> G;
};

Linearization linearize(const RobotState& x_hat, const UnicycleInput& u,
                        const ModelParams& p);

struct UioResult {
    ObserverState next;
    Eigen::Vector2d delta_prev;   // input-bias estimate for the previous step
    RobotState x_hat;             // filtered state estimate for the current step
    Eigen::Matrix2d input_cov;    // covariance of the bias estimate
};

/// One recursion of the extended Kalman filter with simultaneous input-bias
/// estimation. `u_prev` is the nominal input applied at the previous step;
/// `y` is the current measurement. Runs three blocks in order: input
/// estimation, state prediction, state estimation. The covariance is
/// re-symmetrized after the update.
///
/// Throws estimation_error when the innovation covariance is singular
/// (configure nonzero W or V, or rely on the automatic regularization used
/// when both are exactly zero) or when the input is not identifiable at the
/// current linearization.
UioResult uio_step(const ObserverState& obs, const UnicycleInput& u_prev,
                   const Measurement& y, const ModelParams& p);

/// Wheel-space estimate of the previously applied input:
/// H^{-1} (u_prev + delta_hat).
DiffDriveInput estimate_input_dd(const Eigen::Vector2d& delta_hat,
                                 const UnicycleInput& u_prev,
                                 const ModelParams& p);

/// Default initialization: zero state estimate, zero covariance.
inline ObserverState initial_observer() { return ObserverState{}; }

}  // namespace robokey
