#include "robokey/adversary.hpp"

#include <stdexcept>

#include "robokey/rng.hpp"

namespace robokey {

void AdversaryConfig::validate() const {
    if (!(alpha >= 0.0) || alpha >= 1.0) {
        throw std::invalid_argument("alpha must lie in [0, 1)");
    }
    if (alpha > 0.0 && !(targets.r || targets.D || targets.W || targets.V)) {
        throw std::invalid_argument("alpha > 0 needs at least one perturbed parameter");
    }
}

AdversaryModel sample_adversary_model(const ModelParams& p_true,
                                      const AdversaryConfig& cfg) {
    cfg.validate();
    p_true.validate();
    if (cfg.alpha == 0.0) return {p_true};

    RandomStream stream(cfg.seed);
    ModelParams p = p_true;
    // fixed draw order: r, D, W, V
    if (cfg.targets.r) p.r *= 1.0 + stream.uniform(-cfg.alpha, cfg.alpha);
    if (cfg.targets.D) p.D *= 1.0 + stream.uniform(-cfg.alpha, cfg.alpha);
    if (cfg.targets.W) p.W *= 1.0 + stream.uniform(-cfg.alpha, cfg.alpha);
    if (cfg.targets.V) p.V *= 1.0 + stream.uniform(-cfg.alpha, cfg.alpha);
    p.validate();  // alpha < 1 keeps every parameter positive
    return {p};
}

EveDecoder::EveDecoder(AdversaryModel model, EccConfig ecc, std::uint64_t bit_steps)
    : ecc_(ecc), decoder_(model.params, bit_steps), bit_steps_(bit_steps) {
    ecc_.validate();
}

void EveDecoder::observe_ack(const Ack& ack) {
    if (ack.kind == AckKind::None) return;
    const auto it = decoded_.find(ack.seq);
    if (it == decoded_.end()) {
        throw protocol_error("verdict for a codeword the adversary never assembled");
    }
    if (ack.kind == AckKind::Accept) key_out_ += it->second;
    decoded_.erase(it);
}

void EveDecoder::on_message(const Message& msg) {
    if (const auto* cm = std::get_if<ControlMessage>(&msg)) {
        // the verdict refers to a codeword finished strictly earlier, so it
        // is resolved before the new pair is absorbed
        observe_ack(cm->ack);
        decoder_.on_control(cm->pair());
        return;
    }
    const auto& mm = std::get<MeasurementMessage>(msg);
    const auto est = decoder_.on_measurement(mm.step_index, mm.y);
    if (!est) return;
    bits_.push_back(est->bit ? '1' : '0');
    current_.push_back(est->bit ? '1' : '0');
    if (static_cast<int>(current_.size()) == ecc_.n_c) {
        decoded_[seq_] = ecc_decode(current_, ecc_).s_hat;
        ++seq_;
        current_.clear();
    }
}

BitString eve_decode_transcript(const Transcript& transcript, const AdversaryModel& model,
                                const EccConfig& ecc, std::uint64_t bit_steps) {
    EveDecoder eve(model, ecc, bit_steps);
    for (const auto& msg : transcript.records) eve.on_message(msg);
    return eve.key();
}

}  // namespace robokey
