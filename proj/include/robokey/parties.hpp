#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "robokey/control.hpp"
#include "robokey/models.hpp"
#include "robokey/protocol.hpp"
#include "robokey/rng.hpp"
#include "robokey/transport.hpp"

namespace robokey {

/// Session stop conditions: run until the fixed source key is consumed, or
/// until the agreed key reaches a target length.
struct StopCondition {
    enum class Kind { SourceExhausted, TargetAccepted };
    Kind kind = Kind::SourceExhausted;
    std::uint64_t target_bits = 0;
};

struct ControllerConfig {
    ModelParams params;
    ControllerGains gains;
    BiasConfig bias;
    EccConfig ecc;
    SquareTrajectory trajectory{};
    std::uint64_t bit_steps = 0;  // number of protocol steps (fixed-key mode)
    StopCondition stop;
    double xi_initial = 0.01;
    bool protocol_enabled = true;  // false: plain tracking, no key exchange
};

/// Networked-controller endpoint: tracking control, input perturbation,
/// bit decoding through the unknown-input observer, codeword verdicts.
class ControllerParty {
public:
    explicit ControllerParty(ControllerConfig cfg);

    ControlMessage make_control();
    void on_measurement(const MeasurementMessage& mm);
    bool done() const;

    const BitString& key() const { return session_.key_out(); }
    std::uint64_t codewords_total() const { return session_.codewords_total(); }
    std::uint64_t codewords_accepted() const { return session_.codewords_accepted(); }
    std::uint64_t steps_sent() const { return next_step_; }

    /// Bias estimates per decoded step, recorded when diagnostics are on.
    void enable_diagnostics() { diagnostics_ = true; }
    const std::vector<Eigen::Vector2d>& delta_log() const { return delta_log_; }

private:
    bool in_protocol_phase(std::uint64_t step) const;

    ControllerConfig cfg_;
    BitDecoder decoder_;
    ControllerSession session_;
    ControllerState cstate_;
    std::deque<Ack> ack_queue_;
    std::uint64_t next_step_ = 0;
    bool diagnostics_ = false;
    std::vector<Eigen::Vector2d> delta_log_;
};

struct RobotConfig {
    ModelParams params;
    EccConfig ecc;
    BitString key_source;
    RobotState initial_state;
    Eigen::Matrix3d process_noise = Eigen::Matrix3d::Zero();      // injected cov
    Eigen::Matrix3d measurement_noise = Eigen::Matrix3d::Zero();  // injected cov
    std::uint64_t process_seed = 0;
    std::uint64_t measurement_seed = 0;
    std::uint64_t key_seed = 0;   // used only to extend the key on demand
    bool saturation = true;
    bool protocol_enabled = true;
    bool auto_extend_key = false;  // accepted-length stop condition
};

/// Robot endpoint: owns the true plant state and the injected noise
/// streams, walks the key bits, applies the selected input and returns the
/// resulting measurement.
class RobotParty {
public:
    explicit RobotParty(RobotConfig cfg);

    MeasurementMessage on_control(const ControlMessage& cm);

    const BitString& key() const { return session_.key_out(); }
    const BitString& key_source() const { return session_.key_source(); }
    const BitString& bits_sent() const { return bits_sent_; }
    const std::vector<RobotState>& truth() const { return truth_; }
    const RobotState& state() const { return x_; }

private:
    RobotConfig cfg_;
    RobotSession session_;
    RobotState x_;
    CovarianceSampler process_sampler_;
    CovarianceSampler measurement_sampler_;
    RandomStream process_stream_;
    RandomStream measurement_stream_;
    RandomStream key_stream_;
    BitString bits_sent_;
    std::vector<RobotState> truth_;  // x(1..N)
};

/// Random source key of the given length from a dedicated stream.
BitString random_key(std::uint64_t seed, std::uint64_t bits);

}  // namespace robokey
