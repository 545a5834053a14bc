#include "robokey/parties.hpp"

#include <cmath>

namespace robokey {

ControllerParty::ControllerParty(ControllerConfig cfg)
    : cfg_(cfg),
      decoder_(cfg.params, cfg.protocol_enabled ? cfg.bit_steps : 0),
      session_(cfg.ecc),
      cstate_{cfg.xi_initial} {
    cfg_.params.validate();
    cfg_.gains.validate();
    if (cfg_.protocol_enabled) cfg_.bias.validate();
    if (cfg_.stop.kind == StopCondition::Kind::TargetAccepted) {
        // the protocol runs until enough substrings are accepted
        decoder_ = BitDecoder(cfg_.params, UINT64_MAX);
    }
}

bool ControllerParty::in_protocol_phase(std::uint64_t step) const {
    if (!cfg_.protocol_enabled) return false;
    if (cfg_.stop.kind == StopCondition::Kind::TargetAccepted) return true;
    return step < cfg_.bit_steps;
}

ControlMessage ControllerParty::make_control() {
    const std::uint64_t k = next_step_++;
    const ReferencePoint ref = cfg_.trajectory.at(static_cast<double>(k) * cfg_.params.T);
    auto [u, next_state] = tracking_control(cstate_, decoder_.state_estimate(), ref,
                                            cfg_.gains, cfg_.params);
    cstate_ = next_state;

    ControlMessage cm;
    cm.step_index = k;
    if (in_protocol_phase(k)) {
        auto [u0, u1] = perturb_inputs(u, cfg_.bias, cfg_.params);
        cm.u0 = u0;
        cm.u1 = u1;
    } else {
        cm.u0 = cm.u1 = input_transform_inv(u, cfg_.params);
    }
    if (!ack_queue_.empty()) {
        cm.ack = ack_queue_.front();
        ack_queue_.pop_front();
    }
    decoder_.on_control(cm.pair());
    return cm;
}

void ControllerParty::on_measurement(const MeasurementMessage& mm) {
    const auto est = decoder_.on_measurement(mm.step_index, {mm.y.y});
    if (diagnostics_) delta_log_.push_back(decoder_.last_delta());
    if (est) {
        if (auto ack = session_.push_bit(*est)) ack_queue_.push_back(*ack);
    }
}

bool ControllerParty::done() const {
    if (!cfg_.protocol_enabled) {
        // plain tracking baseline: cover the whole moving trajectory
        const auto steps = static_cast<std::uint64_t>(
            std::ceil(cfg_.trajectory.active_duration() / cfg_.params.T));
        return next_step_ >= steps;
    }
    if (cfg_.stop.kind == StopCondition::Kind::TargetAccepted) {
        return session_.key_out().size() >= cfg_.stop.target_bits && ack_queue_.empty();
    }
    // one trailing step carries the last codeword's verdict
    return next_step_ > cfg_.bit_steps;
}

RobotParty::RobotParty(RobotConfig cfg)
    : cfg_(cfg),
      session_(cfg.key_source, cfg.ecc),
      x_(cfg.initial_state),
      process_sampler_(cfg.process_noise),
      measurement_sampler_(cfg.measurement_noise),
      process_stream_(cfg.process_seed),
      measurement_stream_(cfg.measurement_seed),
      key_stream_(cfg.key_seed) {
    cfg_.params.validate();
    if (cfg_.auto_extend_key) {
        // burn the draws already used to build key_source so extensions
        // continue the same stream
        for (std::size_t i = 0; i < cfg_.key_source.size(); ++i) key_stream_.bit();
    }
}

MeasurementMessage RobotParty::on_control(const ControlMessage& cm) {
    if (cm.ack.kind != AckKind::None) session_.handle_ack(cm.ack);

    DiffDriveInput u = cm.u0;
    if (cfg_.protocol_enabled) {
        if (cfg_.auto_extend_key && session_.exhausted()) {
            BitString more;
            for (int i = 0; i < 64; ++i) more.push_back(key_stream_.bit() ? '1' : '0');
            session_.extend_key(more);
        }
        if (!session_.exhausted()) {
            auto [choice, bit] = session_.next_input(cm.pair());
            u = choice;
            bits_sent_.push_back(bit ? '1' : '0');
        }
    }
    if (cfg_.saturation) u = saturate(u, cfg_.params.omega_max);

    NoiseDraw n;
    n.zeta = process_sampler_.sample(process_stream_);
    x_ = diff_drive_step(x_, u, cfg_.params, n);
    truth_.push_back(x_);

    NoiseDraw m;
    m.xi = measurement_sampler_.sample(measurement_stream_);
    return {cm.step_index + 1, measure(x_, cfg_.params, m)};
}

BitString random_key(std::uint64_t seed, std::uint64_t bits) {
    RandomStream stream(seed);
    BitString key;
    key.reserve(bits);
    for (std::uint64_t i = 0; i < bits; ++i) key.push_back(stream.bit() ? '1' : '0');
    return key;
}

}  // namespace robokey
