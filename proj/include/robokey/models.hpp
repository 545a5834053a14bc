#pragma once

#include <Eigen/Dense>
#include <string>

namespace robokey {

/// Planar pose of the robot. The heading is stored unwrapped; use
/// wrap_angle() only for display.
struct RobotState {
    double px = 0.0;     // [m]
    double py = 0.0;     // [m]
    double theta = 0.0;  // [rad], unwrapped

    Eigen::Vector3d vec() const { return {px, py, theta}; }
    static RobotState from_vec(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
    bool finite() const;
};

/// Wheel-space control input: right/left wheel angular velocities [rad/s].
struct DiffDriveInput {
    double omega_r = 0.0;
    double omega_l = 0.0;

    Eigen::Vector2d vec() const { return {omega_r, omega_l}; }
};

/// Body-space control input: linear and angular velocity of the center of
/// mass [m/s, rad/s].
struct UnicycleInput {
    double v = 0.0;
    double omega = 0.0;

    Eigen::Vector2d vec() const { return {v, omega}; }
    static UnicycleInput from_vec(const Eigen::Vector2d& u) { return {u(0), u(1)}; }
};

enum class OutputMap { FullStateIdentity };

OutputMap parse_output_map(const std::string& tag);  // throws on unknown tag
std::string output_map_tag(OutputMap m);

/// Kinematic model knowledge: sampling time, wheel radius, axle length,
/// noise covariances, and the measurement map. The covariances here are
/// what the estimator assumes, which need not equal the noise a simulation
/// actually injects.
struct ModelParams {
    double T = 0.2;       // sampling time [s]
    double r = 0.021;     // wheel radius [m]
    double D = 0.1047;    // axle length [m]
    Eigen::Matrix3d W = 1e-2 * Eigen::Matrix3d::Identity();  // process-noise cov
    Eigen::Matrix3d V = 1e-4 * Eigen::Matrix3d::Identity();  // measurement-noise cov
    OutputMap output_map = OutputMap::FullStateIdentity;
    double omega_max = 38.0;  // wheel speed limit [rad/s]

    void validate() const;  // throws std::invalid_argument

    /// Wheel-to-body input map H = [[r/2, r/2], [r/D, -r/D]].
    Eigen::Matrix2d input_matrix() const;
    /// Closed-form inverse of H.
    Eigen::Matrix2d input_matrix_inv() const;
};

struct Measurement {
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
};

/// One step's noise realization. Kept outside the step functions so the
/// same stream can drive both model forms.
struct NoiseDraw {
    Eigen::Vector3d zeta = Eigen::Vector3d::Zero();  // process noise
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();    // measurement noise
};

/// Map wheel speeds to body velocities: u_body = H * u_wheel.
UnicycleInput input_transform(const DiffDriveInput& u, const ModelParams& p);

/// Map body velocities to wheel speeds: u_wheel = H^{-1} * u_body.
DiffDriveInput input_transform_inv(const UnicycleInput& u, const ModelParams& p);

/// One forward-Euler step of the differential-drive kinematics with
/// additive process noise.
RobotState diff_drive_step(const RobotState& x, const DiffDriveInput& u,
                           const ModelParams& p, const NoiseDraw& n);

/// One forward-Euler step of the equivalent unicycle kinematics.
RobotState unicycle_step(const RobotState& x, const UnicycleInput& u,
                         const ModelParams& p, const NoiseDraw& n);

/// Full-state measurement y = x + xi.
Measurement measure(const RobotState& x, const ModelParams& p, const NoiseDraw& n);

/// Clamp both wheel speeds to [-omega_max, omega_max].
DiffDriveInput saturate(const DiffDriveInput& u, double omega_max);

/// Map an unwrapped angle into (-pi, pi]. Display helper only.
double wrap_angle(double theta);

}  // namespace robokey
