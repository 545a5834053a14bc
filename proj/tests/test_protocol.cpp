#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "robokey/parties.hpp"
#include "robokey/protocol.hpp"
#include "robokey/rng.hpp"

using namespace robokey;

namespace {

ModelParams khepera() {
    ModelParams p;
    p.T = 0.2;
    p.r = 0.021;
    p.D = 0.1047;
    return p;
}

EccConfig rep(int n, int threshold = 0) { return EccConfig{n, 1, n, threshold}; }

// Exhaustive nearest-codeword search over the full code book.
DecodeResult brute_force_decode(const BitString& word, const EccConfig& cfg) {
    DecodeResult best;
    int best_dist = cfg.n_c + 1;
    for (int msg = 0; msg < (1 << cfg.k_c); ++msg) {
        BitString s;
        for (int b = cfg.k_c - 1; b >= 0; --b) s.push_back((msg >> b) & 1 ? '1' : '0');
        const BitString cw = ecc_encode(s, cfg);
        const int d = static_cast<int>(hamming_distance(cw, word));
        if (d < best_dist) {
            best_dist = d;
            best = {s, d};
        }
    }
    return best;
}

BitString word_of(unsigned bits, int n) {
    BitString w;
    for (int b = n - 1; b >= 0; --b) w.push_back((bits >> b) & 1 ? '1' : '0');
    return w;
}

}  // namespace

TEST_CASE("repetition encoding") {
    CHECK(ecc_encode("1", rep(3)) == "111");
    CHECK(ecc_encode("0", rep(3)) == "000");
    CHECK(ecc_encode("1", rep(5)) == "11111");
    CHECK_THROWS_AS(ecc_encode("10", rep(3)), std::invalid_argument);
}

TEST_CASE("repetition decoding") {
    CHECK(ecc_decode("000", rep(3)).s_hat == "0");
    CHECK(ecc_decode("000", rep(3)).dist == 0);
    CHECK(ecc_decode("101", rep(3)).s_hat == "1");
    CHECK(ecc_decode("101", rep(3)).dist == 1);
    CHECK(ecc_decode("110", rep(3)).s_hat == "1");
    CHECK(ecc_decode("110", rep(3)).dist == 1);
}

TEST_CASE("decode equals exhaustive nearest-codeword search") {
    for (const int n : {3, 5, 7, 15}) {
        const EccConfig cfg = rep(n);
        for (unsigned w = 0; w < (1u << n); ++w) {
            const BitString word = word_of(w, n);
            const DecodeResult got = ecc_decode(word, cfg);
            const DecodeResult want = brute_force_decode(word, cfg);
            CHECK(got.s_hat == want.s_hat);
            CHECK(got.dist == want.dist);
        }
    }
}

TEST_CASE("threshold-zero acceptance equals unanimity") {
    const EccConfig cfg = rep(3);
    for (unsigned w = 0; w < 8; ++w) {
        const BitString word = word_of(w, 3);
        const bool unanimous = word == "000" || word == "111";
        CHECK((ecc_decode(word, cfg).dist <= cfg.accept_threshold) == unanimous);
    }
}

TEST_CASE("code parameter validation") {
    CHECK_NOTHROW(rep(3).validate());
    CHECK_NOTHROW(rep(3, 1).validate());
    CHECK_THROWS_AS(rep(3, 2).validate(), std::invalid_argument);  // beyond radius
    CHECK_THROWS_AS(rep(4).validate(), std::invalid_argument);     // even length
    CHECK_THROWS_AS((EccConfig{3, 2, 3, 0}).validate(), std::invalid_argument);
}

TEST_CASE("perturbed input pair") {
    const ModelParams p = khepera();
    const BiasConfig b{0.035, 0.0};
    const auto [u0, u1] = perturb_inputs({0.1, 0.0}, b, p);
    CHECK(u0.omega_r == doctest::Approx(6.428571428571429).epsilon(1e-12));
    CHECK(u0.omega_l == doctest::Approx(6.428571428571429).epsilon(1e-12));
    CHECK(u1.omega_r == doctest::Approx(3.0952380952380953).epsilon(1e-12));
    CHECK(u1.omega_l == doctest::Approx(3.0952380952380953).epsilon(1e-12));
}

TEST_CASE("angular bias separates the wheels antisymmetrically") {
    const ModelParams p = khepera();
    const BiasConfig b{0.0, 0.1};
    const auto [u0, u1] = perturb_inputs({0.05, 0.2}, b, p);
    const double expected = 0.2 * p.D / (2.0 * p.r);
    CHECK(u0.omega_r - u1.omega_r == doctest::Approx(expected).epsilon(1e-12));
    CHECK(u0.omega_l - u1.omega_l == doctest::Approx(-expected).epsilon(1e-12));
}

TEST_CASE("pair midpoint recovers the nominal input") {
    const ModelParams p = khepera();
    RandomStream rng(3);
    for (int i = 0; i < 200; ++i) {
        const UnicycleInput u{rng.uniform(-0.3, 0.3), rng.uniform(-2, 2)};
        const BiasConfig b{rng.uniform(0.0, 0.05), rng.uniform(0.0, 0.05) + 1e-6};
        const auto [u0, u1] = perturb_inputs(u, b, p);
        const Eigen::Vector2d mid = 0.5 * (u0.vec() + u1.vec());
        const Eigen::Vector2d nominal = input_transform_inv(u, p).vec();
        CHECK((mid - nominal).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("bias validation") {
    CHECK_THROWS_AS((BiasConfig{0.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((BiasConfig{-0.01, 0.1}).validate(), std::invalid_argument);
    CHECK_NOTHROW((BiasConfig{0.035, 0.0}).validate());
}

TEST_CASE("bit estimation by distance") {
    PerturbedInputPair pair;
    pair.u0 = {6.428571428571429, 6.428571428571429};
    pair.u1 = {3.0952380952380953, 3.0952380952380953};

    const BitEstimate exact = controller_estimate_bit(pair.u1, pair);
    CHECK(exact.bit == 1);
    CHECK_FALSE(exact.tie);

    const BitEstimate near0 = controller_estimate_bit({6.0, 6.0}, pair);
    CHECK(near0.bit == 0);
    CHECK_FALSE(near0.tie);

    PerturbedInputPair tie_pair;  // midpoint exactly representable
    tie_pair.u0 = {1.0, 1.0};
    tie_pair.u1 = {-1.0, -1.0};
    const BitEstimate tied = controller_estimate_bit({0.0, 0.0}, tie_pair);
    CHECK(tied.bit == 0);
    CHECK(tied.tie);
}

TEST_CASE("robot session walks codeword bits and picks the branch") {
    PerturbedInputPair pair;
    pair.u0 = {1.0, 1.0};
    pair.u1 = {-1.0, -1.0};

    RobotSession ones("1", rep(3));  // codeword 111
    const auto [u_first, bit_first] = ones.next_input(pair);
    CHECK(bit_first == 1);
    CHECK(u_first.omega_r == -1.0);  // bit 1 selects u1

    RobotSession zeros("0", rep(3));  // codeword 000
    for (int i = 0; i < 3; ++i) {
        const auto [u, bit] = zeros.next_input(pair);
        CHECK(bit == 0);
        CHECK(u.omega_r == 1.0);
    }
    CHECK(zeros.exhausted());
    CHECK_THROWS_AS(zeros.next_input(pair), std::logic_error);
}

TEST_CASE("a 345-bit key consumes 1035 bit steps") {
    const BitString key = random_key(99, 345);
    RobotSession sess(key, rep(3));
    PerturbedInputPair pair;
    int steps = 0;
    while (!sess.exhausted()) {
        sess.next_input(pair);
        ++steps;
    }
    CHECK(steps == 1035);
}

TEST_CASE("robot ack handling") {
    PerturbedInputPair pair;
    RobotSession sess("10", rep(3));
    for (int i = 0; i < 3; ++i) sess.next_input(pair);  // codeword 0 pending
    sess.handle_ack({AckKind::Accept, 0});
    CHECK(sess.key_out() == "1");

    for (int i = 0; i < 3; ++i) sess.next_input(pair);  // codeword 1 pending
    sess.handle_ack({AckKind::Reject, 1});
    CHECK(sess.key_out() == "1");

    CHECK_THROWS_AS(sess.handle_ack({AckKind::Accept, 9}), protocol_error);
}

TEST_CASE("controller session decides codeword verdicts") {
    ControllerSession unanimity(rep(3, 0));
    CHECK_FALSE(unanimity.push_bit({1, false}).has_value());
    CHECK_FALSE(unanimity.push_bit({1, false}).has_value());
    const auto acc = unanimity.push_bit({1, false});
    REQUIRE(acc.has_value());
    CHECK(acc->kind == AckKind::Accept);
    CHECK(acc->seq == 0);
    CHECK(unanimity.key_out() == "1");

    unanimity.push_bit({1, false});
    unanimity.push_bit({1, false});
    const auto rej = unanimity.push_bit({0, false});
    REQUIRE(rej.has_value());
    CHECK(rej->kind == AckKind::Reject);
    CHECK(rej->seq == 1);
    CHECK(unanimity.key_out() == "1");

    ControllerSession within_radius(rep(3, 1));
    within_radius.push_bit({1, false});
    within_radius.push_bit({1, false});
    const auto acc2 = within_radius.push_bit({0, false});
    REQUIRE(acc2.has_value());
    CHECK(acc2->kind == AckKind::Accept);
    CHECK(within_radius.key_out() == "1");
}

TEST_CASE("a tied bit forces rejection") {
    ControllerSession sess(rep(3, 1));
    sess.push_bit({1, true});
    sess.push_bit({1, false});
    const auto ack = sess.push_bit({1, false});
    REQUIRE(ack.has_value());
    CHECK(ack->kind == AckKind::Reject);
}

TEST_CASE("key digests") {
    const KeyMaterial empty = make_key_material("");
    CHECK(digest_hex(empty) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const KeyMaterial zero = make_key_material("0");
    CHECK(digest_hex(zero) ==
          "5feceb66ffc86f38d952786c6d696c79c2dbc239dd4e91b46729d73a27fb57e9");
    CHECK(digest_hex(make_key_material("0110")) ==
          "a5c3dd48facf21ed5f916d0ae979091fead570e6aea6c1d8038d1f68b26fa51f");
}

TEST_CASE("key verification") {
    const BitString key = random_key(4, 345);
    CHECK(verify_keys(make_key_material(key), make_key_material(key)));

    BitString flipped = key;
    flipped[100] = flipped[100] == '0' ? '1' : '0';
    CHECK_FALSE(verify_keys(make_key_material(key), make_key_material(flipped)));

    CHECK(verify_keys(make_key_material(""), make_key_material("")));
}

TEST_CASE("decoder rejects out-of-order measurements") {
    BitDecoder dec(khepera(), 100);
    PerturbedInputPair pair;
    pair.step_index = 0;
    pair.u0 = input_transform_inv({0.135, 0.0}, khepera());
    pair.u1 = input_transform_inv({0.065, 0.0}, khepera());
    dec.on_control(pair);
    CHECK_THROWS_AS(dec.on_measurement(5, {Eigen::Vector3d::Zero()}), protocol_error);
}

TEST_CASE("decoder recovers the transmitted bit in one noise-free step") {
    ModelParams p = khepera();
    p.W.setZero();
    p.V.setZero();
    const BiasConfig b{0.035, 0.0};
    const UnicycleInput nominal{0.1, 0.0};
    const auto [u0, u1] = perturb_inputs(nominal, b, p);
    PerturbedInputPair pair{0, u0, u1, {}};

    for (const int sent : {0, 1}) {
        BitDecoder dec(p, 100);
        dec.on_control(pair);
        const RobotState x1 =
            diff_drive_step({0, 0, 0}, sent == 0 ? u0 : u1, p, {});
        const auto est = dec.on_measurement(1, {x1.vec()});
        REQUIRE(est.has_value());
        CHECK(est->bit == sent);
        CHECK_FALSE(est->tie);
    }
}
