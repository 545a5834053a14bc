#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "robokey/models.hpp"
#include "robokey/observer.hpp"

namespace robokey {

class protocol_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bit strings are ASCII '0'/'1' throughout: trivially loggable, hashable
/// and diffable.
using BitString = std::string;

std::size_t hamming_distance(const BitString& a, const BitString& b);

/// Linear block-code parameters. The shipped code is the repetition code:
/// k_c = 1, n_c odd, d_c = n_c.
struct EccConfig {
    int n_c = 3;  // codeword length
    int k_c = 1;  // message length
    int d_c = 3;  // minimum distance
    int accept_threshold = 0;  // max accepted decoding distance

    void validate() const;
};

BitString ecc_encode(const BitString& s, const EccConfig& cfg);

struct DecodeResult {
    BitString s_hat;
    int dist = 0;  // Hamming distance from the received word to the code
};

/// Nearest-codeword decoding; for the repetition code this is a majority
/// vote and `dist` counts the minority bits.
DecodeResult ecc_decode(const BitString& c_hat, const EccConfig& cfg);

/// Per-step input bias. At least one component must be positive for the
/// perturbed pair to carry information.
struct BiasConfig {
    double delta_v = 0.035;     // [m/s]
    double delta_omega = 0.0;   // [rad/s]

    void validate() const;
    bool enabled() const { return delta_v + delta_omega > 0.0; }
};

enum class AckKind : std::uint8_t { None, Accept, Reject };

struct Ack {
    AckKind kind = AckKind::None;
    std::uint64_t seq = 0;  // codeword index, meaningful unless kind == None
};

/// The two candidate wheel-space inputs for one step, plus the piggybacked
/// codeword verdict.
struct PerturbedInputPair {
    std::uint64_t step_index = 0;
    DiffDriveInput u0;  // +delta branch, selected by bit 0
    DiffDriveInput u1;  // -delta branch, selected by bit 1
    Ack ack;
};

/// u0 = H^{-1}(u + delta), u1 = H^{-1}(u - delta).
std::pair<DiffDriveInput, DiffDriveInput> perturb_inputs(
    const UnicycleInput& u, const BiasConfig& b, const ModelParams& p);

struct BitEstimate {
    int bit = 0;
    bool tie = false;
};

/// Classify the estimated wheel input against the candidate pair by
/// Euclidean distance. An exact tie resolves to 0 with the tie flag set.
BitEstimate controller_estimate_bit(const DiffDriveInput& u_hat,
                                    const PerturbedInputPair& pair_prev);

/// Robot-side protocol state: walks the source key codeword by codeword,
/// picks the input branch for each bit, and appends acknowledged
/// substrings to the agreed key.
class RobotSession {
public:
    RobotSession(BitString key_source, EccConfig cfg);

    bool exhausted() const;
    /// Consume the current codeword bit and pick the matching input.
    /// Throws std::logic_error when the key source is exhausted.
    std::pair<DiffDriveInput, int> next_input(const PerturbedInputPair& pair);
    void handle_ack(const Ack& ack);  // protocol_error on unknown sequence
    /// Extend the source key (used by the accepted-length stop condition).
    void extend_key(const BitString& more_bits);

    const BitString& key_out() const { return key_out_; }
    const BitString& key_source() const { return key_source_; }
    std::uint64_t codeword_seq() const { return seq_; }

private:
    void load_next_codeword();

    EccConfig cfg_;
    BitString key_source_;
    std::size_t source_pos_ = 0;  // next substring start
    BitString current_codeword_;
    int bit_cursor_ = 0;
    std::uint64_t seq_ = 0;
    std::deque<std::pair<std::uint64_t, BitString>> pending_;
    BitString key_out_;  // accepted substrings
};

/// Controller-side codeword assembly: collects estimated bits, decodes a
/// full codeword, and decides acceptance. Codewords containing a tied bit
/// estimate are rejected regardless of distance.
class ControllerSession {
public:
    explicit ControllerSession(EccConfig cfg);

    std::optional<Ack> push_bit(const BitEstimate& est);

    const BitString& key_out() const { return key_out_; }
    std::uint64_t codewords_total() const { return seq_; }
    std::uint64_t codewords_accepted() const { return accepted_; }

private:
    EccConfig cfg_;
    BitString current_;
    bool tie_in_current_ = false;
    std::uint64_t seq_ = 0;
    std::uint64_t accepted_ = 0;
    BitString key_out_;
};

/// Shared decoding front end over the public message stream: reconstructs
/// the nominal body-frame input from the midpoint of each transmitted pair,
/// runs the unknown-input observer, and classifies the input applied at the
/// previous step. Both the controller and the eavesdropper instantiate this
/// with their own model knowledge; with identical knowledge the outputs are
/// bitwise identical.
class BitDecoder {
public:
    BitDecoder(ModelParams params, std::uint64_t bit_steps);

    void on_control(const PerturbedInputPair& pair);
    /// Feed the measurement for step `pair.step_index + 1`; returns the bit
    /// estimate for the previous step when that step carried a bit.
    std::optional<BitEstimate> on_measurement(std::uint64_t step_index,
                                              const Measurement& y);

    const RobotState& state_estimate() const { return obs_.x_hat; }
    const ObserverState& observer() const { return obs_; }
    const Eigen::Vector2d& last_delta() const { return obs_.delta_hat; }

private:
    ModelParams params_;
    Eigen::Matrix2d h_;  // cached input map of this decoder's model
    std::uint64_t bit_steps_;
    ObserverState obs_;
    std::optional<PerturbedInputPair> prev_pair_;
    UnicycleInput prev_u_fed_;
};

/// A key plus its digest, for the public equality check.
struct KeyMaterial {
    BitString bits;
    std::array<std::uint8_t, 32> digest{};
};

/// SHA-256 over the ASCII bit string.
KeyMaterial make_key_material(BitString bits);
std::string digest_hex(const KeyMaterial& km);

/// True iff the digests match; equal bit strings always verify.
bool verify_keys(const KeyMaterial& a, const KeyMaterial& b);

}  // namespace robokey
