#pragma once

#include <Eigen/Dense>
#include <utility>

#include "robokey/models.hpp"

namespace robokey {

/// Sample of the reference trajectory: planar position, velocity and
/// acceleration.
struct ReferencePoint {
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    Eigen::Vector2d vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
};

/// Square path with cubic timing on each side: the position profile along
/// a side is s(tau) = 3 tau^2 - 2 tau^3, so velocity is zero at every
/// vertex. After the configured number of laps the trajectory holds the
/// final vertex.
class SquareTrajectory {
public:
    SquareTrajectory(double side_length = 1.0, double side_duration = 17.0,
                     int laps = 3);

    ReferencePoint at(double t) const;  // throws on t < 0

    double side_duration() const { return side_duration_; }
    int laps() const { return laps_; }
    /// Time spent moving (after this the reference holds still).
    double active_duration() const { return laps_ * 4 * side_duration_; }

private:
    double side_length_;
    double side_duration_;
    int laps_;
    Eigen::Vector2d vertex(int i) const;
};

struct ControllerGains {
    double kp_x = 1.10;   // [1/s^2]
    double kp_y = 1.10;
    double kd_x = 0.80;   // [1/s]
    double kd_y = 0.80;
    double xi_min = 0.01;  // compensator singularity guard [m/s]

    void validate() const;
};

/// Dynamic-compensator state: the commanded linear speed.
struct ControllerState {
    double xi_comp = 0.01;  // [m/s], |xi_comp| >= xi_min
};

/// Dynamic feedback linearization for the unicycle. Computes virtual planar
/// accelerations from PD feedback on the flat outputs, integrates the
/// linear-speed compensator with the plant sampling time, and converts to
/// (v, omega). The compensator magnitude is clamped away from zero, where
/// the linearization is singular.
std::pair<UnicycleInput, ControllerState> tracking_control(
    const ControllerState& cs, const RobotState& x_hat, const ReferencePoint& ref,
    const ControllerGains& g, const ModelParams& p);

}  // namespace robokey
