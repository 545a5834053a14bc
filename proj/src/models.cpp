#include "robokey/models.hpp"

#include <cmath>
#include <stdexcept>

namespace robokey {

namespace {

bool psd(const Eigen::Matrix3d& m, double tol = 1e-10) {
    if (!m.isApprox(m.transpose(), 1e-10) && (m - m.transpose()).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace

bool RobotState::finite() const {
    return std::isfinite(px) && std::isfinite(py) && std::isfinite(theta);
}

OutputMap parse_output_map(const std::string& tag) {
    if (tag == "full-state-identity") return OutputMap::FullStateIdentity;
    throw std::invalid_argument("unsupported output map tag: " + tag);
}

std::string output_map_tag(OutputMap) { return "full-state-identity"; }

void ModelParams::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("sampling time must be positive");
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("wheel radius must be positive");
    if (!(D > 0.0) || !std::isfinite(D)) throw std::invalid_argument("axle length must be positive");
    if (!(omega_max > 0.0)) throw std::invalid_argument("wheel speed limit must be positive");
    if (!psd(W)) throw std::invalid_argument("process-noise covariance must be symmetric PSD");
    if (!psd(V)) throw std::invalid_argument("measurement-noise covariance must be symmetric PSD");
}

Eigen::Matrix2d ModelParams::input_matrix() const {
    Eigen::Matrix2d h;
    h << r / 2.0, r / 2.0,
         r / D,  -r / D;
    return h;
}

Eigen::Matrix2d ModelParams::input_matrix_inv() const {
    Eigen::Matrix2d hinv;
    hinv << 1.0 / r,  D / (2.0 * r),
            1.0 / r, -D / (2.0 * r);
    return hinv;
}

UnicycleInput input_transform(const DiffDriveInput& u, const ModelParams& p) {
    return {p.r / 2.0 * (u.omega_r + u.omega_l),
            p.r / p.D * (u.omega_r - u.omega_l)};
}

DiffDriveInput input_transform_inv(const UnicycleInput& u, const ModelParams& p) {
    const double common = u.v / p.r;
    const double diff = p.D / (2.0 * p.r) * u.omega;
    return {common + diff, common - diff};
}

RobotState diff_drive_step(const RobotState& x, const DiffDriveInput& u,
                           const ModelParams& p, const NoiseDraw& n) {
    if (!x.finite()) throw std::invalid_argument("non-finite robot state");
    if (!std::isfinite(u.omega_r) || !std::isfinite(u.omega_l)) {
        throw std::invalid_argument("non-finite wheel input");
    }
    const double sum = u.omega_r + u.omega_l;
    const double dif = u.omega_r - u.omega_l;
    return {x.px + p.T * p.r / 2.0 * std::cos(x.theta) * sum + n.zeta(0),
            x.py + p.T * p.r / 2.0 * std::sin(x.theta) * sum + n.zeta(1),
            x.theta + p.T * p.r / p.D * dif + n.zeta(2)};
}

RobotState unicycle_step(const RobotState& x, const UnicycleInput& u,
                         const ModelParams& p, const NoiseDraw& n) {
    if (!x.finite()) throw std::invalid_argument("non-finite robot state");
    if (!std::isfinite(u.v) || !std::isfinite(u.omega)) {
        throw std::invalid_argument("non-finite unicycle input");
    }
    return {x.px + p.T * u.v * std::cos(x.theta) + n.zeta(0),
            x.py + p.T * u.v * std::sin(x.theta) + n.zeta(1),
            x.theta + p.T * u.omega + n.zeta(2)};
}

Measurement measure(const RobotState& x, const ModelParams& p, const NoiseDraw& n) {
    (void)p;  // identity map; other maps are rejected at configuration time
    return {x.vec() + n.xi};
}

DiffDriveInput saturate(const DiffDriveInput& u, double omega_max) {
    auto clamp = [omega_max](double w) {
        return std::max(-omega_max, std::min(omega_max, w));
    };
    return {clamp(u.omega_r), clamp(u.omega_l)};
}

double wrap_angle(double theta) {
    double a = std::remainder(theta, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace robokey
