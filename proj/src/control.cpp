#include "robokey/control.hpp"

#include <cmath>
#include <stdexcept>

namespace robokey {

SquareTrajectory::SquareTrajectory(double side_length, double side_duration, int laps)
    : side_length_(side_length), side_duration_(side_duration), laps_(laps) {
    if (!(side_length > 0.0) || !(side_duration > 0.0) || laps < 1) {
        throw std::invalid_argument("invalid square trajectory parameters");
    }
}

Eigen::Vector2d SquareTrajectory::vertex(int i) const {
    static const double vx[4] = {0.0, 1.0, 1.0, 0.0};
    static const double vy[4] = {0.0, 0.0, 1.0, 1.0};
    const int j = i % 4;
    return {side_length_ * vx[j], side_length_ * vy[j]};
}

ReferencePoint SquareTrajectory::at(double t) const {
    if (t < 0.0) throw std::invalid_argument("trajectory time must be non-negative");
    ReferencePoint ref;
    if (t >= active_duration()) {
        ref.pos = vertex(0);  // laps close at the starting vertex
        return ref;
    }
    const int side = static_cast<int>(std::floor(t / side_duration_));
    const double tau = (t - side * side_duration_) / side_duration_;
    const Eigen::Vector2d a = vertex(side);
    const Eigen::Vector2d b = vertex(side + 1);
    const Eigen::Vector2d d = b - a;
    const double s = tau * tau * (3.0 - 2.0 * tau);
    const double sd = 6.0 * tau * (1.0 - tau) / side_duration_;
    const double sdd = (6.0 - 12.0 * tau) / (side_duration_ * side_duration_);
    ref.pos = a + s * d;
    ref.vel = sd * d;
    ref.acc = sdd * d;
    return ref;
}

void ControllerGains::validate() const {
    if (!(kp_x > 0.0 && kp_y > 0.0 && kd_x > 0.0 && kd_y > 0.0 && xi_min > 0.0)) {
        throw std::invalid_argument("controller gains must be positive");
    }
}

std::pair<UnicycleInput, ControllerState> tracking_control(
    const ControllerState& cs, const RobotState& x_hat, const ReferencePoint& ref,
    const ControllerGains& g, const ModelParams& p) {
    const double c = std::cos(x_hat.theta);
    const double s = std::sin(x_hat.theta);
    const double ax = ref.acc(0) + g.kd_x * (ref.vel(0) - cs.xi_comp * c)
                    + g.kp_x * (ref.pos(0) - x_hat.px);
    const double ay = ref.acc(1) + g.kd_y * (ref.vel(1) - cs.xi_comp * s)
                    + g.kp_y * (ref.pos(1) - x_hat.py);
    double xi = cs.xi_comp + p.T * (ax * c + ay * s);
    if (std::abs(xi) < g.xi_min) {
        // hold at the guard with the pre-update sign
        xi = (cs.xi_comp < 0.0 ? -g.xi_min : g.xi_min);
    }
    const UnicycleInput u{xi, (ay * c - ax * s) / xi};
    return {u, ControllerState{xi}};
}

}  // namespace robokey
