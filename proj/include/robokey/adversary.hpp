#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "robokey/models.hpp"
#include "robokey/protocol.hpp"
#include "robokey/transport.hpp"

namespace robokey {

/// Eavesdropper knowledge bounds: each targeted parameter is known up to a
/// relative error drawn uniformly from [-alpha, alpha].
struct AdversaryConfig {
    double alpha = 0.0;
    struct Targets {
        bool r = true;
        bool D = true;
        bool W = true;
        bool V = true;
    } targets;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The eavesdropper's (possibly wrong) model knowledge.
struct AdversaryModel {
    ModelParams params;
};

/// Draw the adversary's model: targeted scalars become q*(1+eps) with
/// independent eps ~ U[-alpha, alpha]; covariances are scaled as whole
/// matrices so they stay PSD. Sampling time and output map are public and
/// copied unchanged. Deterministic given the seed; alpha = 0 returns the
/// true parameters bit for bit.
AdversaryModel sample_adversary_model(const ModelParams& p_true,
                                      const AdversaryConfig& cfg);

/// Passive decoder over the public message stream: runs the same
/// unknown-input observer front end as the controller but with the
/// adversary's model, groups its own bit estimates into codewords, and
/// keeps exactly the substrings the controller's public verdicts accepted.
/// Consumes an immutable view of the transcript; never touches plant,
/// controller or transport state.
class EveDecoder {
public:
    EveDecoder(AdversaryModel model, EccConfig ecc, std::uint64_t bit_steps);

    void on_message(const Message& msg);

    const BitString& key() const { return key_out_; }
    const BitString& bit_stream() const { return bits_; }

private:
    void observe_ack(const Ack& ack);

    EccConfig ecc_;
    BitDecoder decoder_;
    std::uint64_t bit_steps_;
    BitString bits_;          // raw per-step estimates
    BitString current_;       // codeword under assembly
    bool current_tie_ = false;
    std::uint64_t seq_ = 0;
    std::map<std::uint64_t, BitString> decoded_;  // awaiting public verdict
    BitString key_out_;
};

/// Post-hoc decode of a full transcript (identical to feeding EveDecoder
/// online, message by message).
BitString eve_decode_transcript(const Transcript& transcript, const AdversaryModel& model,
                                const EccConfig& ecc, std::uint64_t bit_steps);

}  // namespace robokey
