#include "robokey/protocol.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>

namespace robokey {

std::size_t hamming_distance(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming distance needs equal lengths");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

namespace {

void check_bits(const BitString& s) {
    for (char c : s) {
        if (c != '0' && c != '1') throw std::invalid_argument("bit string must be '0'/'1'");
    }
}

}  // namespace

void EccConfig::validate() const {
    if (n_c < 1 || k_c < 1 || d_c < 1) throw std::invalid_argument("code parameters must be positive");
    if (k_c > n_c) throw std::invalid_argument("message length exceeds codeword length");
    if (accept_threshold < 0 || accept_threshold > (d_c - 1) / 2) {
        throw std::invalid_argument("accept threshold exceeds correction radius");
    }
    // shipped code: repetition
    if (k_c != 1 || n_c % 2 == 0 || d_c != n_c) {
        throw std::invalid_argument("repetition code requires k_c=1, odd n_c, d_c=n_c");
    }
}

BitString ecc_encode(const BitString& s, const EccConfig& cfg) {
    check_bits(s);
    if (static_cast<int>(s.size()) != cfg.k_c) {
        throw std::invalid_argument("message length must equal k_c");
    }
    return BitString(static_cast<std::size_t>(cfg.n_c), s[0]);
}

DecodeResult ecc_decode(const BitString& c_hat, const EccConfig& cfg) {
    check_bits(c_hat);
    if (static_cast<int>(c_hat.size()) != cfg.n_c) {
        throw std::invalid_argument("received word length must equal n_c");
    }
    const int ones = static_cast<int>(std::count(c_hat.begin(), c_hat.end(), '1'));
    const int zeros = cfg.n_c - ones;
    // majority vote; n_c is odd so ties cannot occur
    if (ones > zeros) return {"1", zeros};
    return {"0", ones};
}

void BiasConfig::validate() const {
    if (delta_v < 0.0 || delta_omega < 0.0) {
        throw std::invalid_argument("bias components must be non-negative");
    }
    if (!(delta_v + delta_omega > 0.0)) {
        throw std::invalid_argument("at least one bias component must be positive");
    }
}

std::pair<DiffDriveInput, DiffDriveInput> perturb_inputs(
    const UnicycleInput& u, const BiasConfig& b, const ModelParams& p) {
    const DiffDriveInput u0 =
        input_transform_inv({u.v + b.delta_v, u.omega + b.delta_omega}, p);
    const DiffDriveInput u1 =
        input_transform_inv({u.v - b.delta_v, u.omega - b.delta_omega}, p);
    return {u0, u1};
}

BitEstimate controller_estimate_bit(const DiffDriveInput& u_hat,
                                    const PerturbedInputPair& pair_prev) {
    const double d0 = (u_hat.vec() - pair_prev.u0.vec()).norm();
    const double d1 = (u_hat.vec() - pair_prev.u1.vec()).norm();
    if (d0 < d1) return {0, false};
    if (d1 < d0) return {1, false};
    return {0, true};
}

RobotSession::RobotSession(BitString key_source, EccConfig cfg)
    : cfg_(cfg), key_source_(std::move(key_source)) {
    cfg_.validate();
    check_bits(key_source_);
    if (key_source_.size() % static_cast<std::size_t>(cfg_.k_c) != 0) {
        throw std::invalid_argument("key length must be a multiple of k_c");
    }
    load_next_codeword();
}

void RobotSession::load_next_codeword() {
    if (source_pos_ + static_cast<std::size_t>(cfg_.k_c) > key_source_.size()) {
        current_codeword_.clear();
        return;
    }
    const BitString s = key_source_.substr(source_pos_, static_cast<std::size_t>(cfg_.k_c));
    source_pos_ += static_cast<std::size_t>(cfg_.k_c);
    current_codeword_ = ecc_encode(s, cfg_);
    bit_cursor_ = 0;
}

bool RobotSession::exhausted() const { return current_codeword_.empty(); }

std::pair<DiffDriveInput, int> RobotSession::next_input(const PerturbedInputPair& pair) {
    if (exhausted()) throw std::logic_error("key source exhausted");
    const int bit = current_codeword_[static_cast<std::size_t>(bit_cursor_)] - '0';
    ++bit_cursor_;
    if (bit_cursor_ == cfg_.n_c) {
        const BitString s = ecc_decode(current_codeword_, cfg_).s_hat;  // == source substring
        pending_.emplace_back(seq_, s);
        ++seq_;
        load_next_codeword();
    }
    return {bit == 0 ? pair.u0 : pair.u1, bit};
}

void RobotSession::handle_ack(const Ack& ack) {
    if (ack.kind == AckKind::None) return;
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [&](const auto& e) { return e.first == ack.seq; });
    if (it == pending_.end()) {
        throw protocol_error("ack references unknown codeword sequence " +
                             std::to_string(ack.seq));
    }
    if (ack.kind == AckKind::Accept) key_out_ += it->second;
    pending_.erase(it);
}

void RobotSession::extend_key(const BitString& more_bits) {
    check_bits(more_bits);
    if (more_bits.size() % static_cast<std::size_t>(cfg_.k_c) != 0) {
        throw std::invalid_argument("extension length must be a multiple of k_c");
    }
    key_source_ += more_bits;
    if (exhausted()) load_next_codeword();
}

ControllerSession::ControllerSession(EccConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<Ack> ControllerSession::push_bit(const BitEstimate& est) {
    current_.push_back(est.bit ? '1' : '0');
    tie_in_current_ = tie_in_current_ || est.tie;
    if (static_cast<int>(current_.size()) < cfg_.n_c) return std::nullopt;
    const DecodeResult dec = ecc_decode(current_, cfg_);
    const bool accept = dec.dist <= cfg_.accept_threshold && !tie_in_current_;
    Ack ack{accept ? AckKind::Accept : AckKind::Reject, seq_};
    if (accept) {
        key_out_ += dec.s_hat;
        ++accepted_;
    }
    ++seq_;
    current_.clear();
    tie_in_current_ = false;
    return ack;
}

BitDecoder::BitDecoder(ModelParams params, std::uint64_t bit_steps)
    : params_(std::move(params)), h_(params_.input_matrix()), bit_steps_(bit_steps) {
    params_.validate();
}

void BitDecoder::on_control(const PerturbedInputPair& pair) {
    prev_pair_ = pair;
    // nominal input as transmitted: midpoint of the pair mapped through this
    // decoder's input matrix
    const Eigen::Vector2d mid = 0.5 * (pair.u0.vec() + pair.u1.vec());
    prev_u_fed_ = UnicycleInput::from_vec(h_ * mid);
}

std::optional<BitEstimate> BitDecoder::on_measurement(std::uint64_t step_index,
                                                      const Measurement& y) {
    if (!prev_pair_ || prev_pair_->step_index + 1 != step_index) {
        throw protocol_error("measurement out of order with control stream");
    }
    const UioResult res = uio_step(obs_, prev_u_fed_, y, params_);
    obs_ = res.next;
    if (prev_pair_->step_index >= bit_steps_) return std::nullopt;
    const DiffDriveInput u_hat = estimate_input_dd(res.delta_prev, prev_u_fed_, params_);
    return controller_estimate_bit(u_hat, *prev_pair_);
}

KeyMaterial make_key_material(BitString bits) {
    check_bits(bits);
    KeyMaterial km;
    km.bits = std::move(bits);
    unsigned int len = 0;
    EVP_Digest(km.bits.data(), km.bits.size(), km.digest.data(), &len,
               EVP_sha256(), nullptr);
    return km;
}

std::string digest_hex(const KeyMaterial& km) {
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : km.digest) {
        out.push_back(hexd[b >> 4]);
        out.push_back(hexd[b & 0xF]);
    }
    return out;
}

bool verify_keys(const KeyMaterial& a, const KeyMaterial& b) {
    return a.digest == b.digest;
}

}  // namespace robokey
