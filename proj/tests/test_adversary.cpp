#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "robokey/adversary.hpp"
#include "robokey/harness.hpp"

using namespace robokey;

namespace {

ExperimentConfig small_episode(std::uint64_t master, double alpha) {
    ExperimentConfig cfg;
    cfg.key_bits = 60;
    cfg.adversary.alpha = alpha;
    cfg.seeds = derive_seeds(master, 0, 0);
    cfg.adversary.seed = cfg.seeds.adversary;
    return cfg;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("alpha zero keeps the true parameters bit for bit") {
    ModelParams p;
    const AdversaryModel m = sample_adversary_model(p, {0.0, {}, 1234});
    CHECK(m.params.r == p.r);
    CHECK(m.params.D == p.D);
    CHECK((m.params.W - p.W).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.params.V - p.V).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbed parameters stay inside the error bound") {
    ModelParams p;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const AdversaryModel m = sample_adversary_model(p, {0.1, {}, seed});
        CHECK(m.params.r >= 0.9 * p.r);
        CHECK(m.params.r <= 1.1 * p.r);
        CHECK(m.params.D >= 0.9 * p.D);
        CHECK(m.params.D <= 1.1 * p.D);
        CHECK(m.params.W(0, 0) >= 0.9 * p.W(0, 0));
        CHECK(m.params.W(0, 0) <= 1.1 * p.W(0, 0));
        CHECK_NOTHROW(m.params.validate());
    }
}

TEST_CASE("model sampling is deterministic in the seed") {
    ModelParams p;
    const AdversaryModel a = sample_adversary_model(p, {0.07, {}, 99});
    const AdversaryModel b = sample_adversary_model(p, {0.07, {}, 99});
    CHECK(a.params.r == b.params.r);
    CHECK(a.params.D == b.params.D);
    const AdversaryModel c = sample_adversary_model(p, {0.07, {}, 100});
    CHECK(a.params.r != c.params.r);
}

TEST_CASE("perturbation targets can be restricted") {
    ModelParams p;
    AdversaryConfig cfg{0.1, {true, false, false, false}, 7};
    const AdversaryModel m = sample_adversary_model(p, cfg);
    CHECK(m.params.r != p.r);
    CHECK(m.params.D == p.D);
    CHECK((m.params.W - p.W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("configuration validation") {
    CHECK_THROWS_AS((AdversaryConfig{1.0, {}, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((AdversaryConfig{-0.1, {}, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(
        (AdversaryConfig{0.1, {false, false, false, false}, 0}).validate(),
        std::invalid_argument);
}

TEST_CASE("perfect knowledge decodes the controller key exactly") {
    // same deterministic computation on identical inputs
    for (std::uint64_t master : {1ull, 7ull, 1234ull}) {
        const EpisodeResult ep = run_episode(small_episode(master, 0.0));
        CHECK(ep.key_eve == ep.key_controller);
        CHECK(ep.metrics.eve_disagreement == 0.0);
    }
}

TEST_CASE("the adversary key always has the controller key's length") {
    for (const double alpha : {0.0, 0.05, 0.1}) {
        const EpisodeResult ep = run_episode(small_episode(21, alpha));
        CHECK(ep.key_eve.size() == ep.key_controller.size());
    }
}

TEST_CASE("online and offline decoding are identical") {
    const ExperimentConfig cfg = small_episode(5, 0.08);
    const EpisodeResult ep = run_episode(cfg);
    const AdversaryModel model = sample_adversary_model(
        cfg.params, AdversaryConfig{cfg.adversary.alpha, cfg.adversary.targets,
                                    cfg.seeds.adversary});

    // online: message by message, as a live tap would deliver them
    EveDecoder online(model, cfg.ecc, cfg.bit_steps());
    for (const auto& msg : ep.transcript.records) online.on_message(msg);

    // offline: post-hoc fold over the stored transcript
    const BitString offline =
        eve_decode_transcript(ep.transcript, model, cfg.ecc, cfg.bit_steps());

    CHECK(online.key() == offline);
    CHECK(offline == ep.key_eve);
}

TEST_CASE("all-rejected sessions leave the adversary with an empty key") {
    // an impossible acceptance threshold is simulated by feeding a transcript
    // whose verdicts are all rejections: bias off for the controller would
    // disable the protocol, so instead decode a real transcript and check
    // the adversary only keeps accepted sequences
    const ExperimentConfig cfg = small_episode(11, 0.0);
    EpisodeResult ep = run_episode(cfg);
    // strip every accept into a reject before the adversary sees it
    for (auto& msg : ep.transcript.records) {
        if (auto* cm = std::get_if<ControlMessage>(&msg)) {
            if (cm->ack.kind == AckKind::Accept) cm->ack.kind = AckKind::Reject;
        }
    }
    const AdversaryModel model{cfg.params};
    const BitString key =
        eve_decode_transcript(ep.transcript, model, cfg.ecc, cfg.bit_steps());
    CHECK(key.empty());
}

TEST_CASE("disagreement grows with the knowledge error bound") {
    // run at the physical noise level of the testbed with the correction
    // radius open (threshold 1), where the eavesdropper's channel is
    // measurably worse; compare alpha = 1.1% vs alpha = 10%
    auto sweep_median = [](double alpha) {
        std::vector<double> vals;
        for (int run = 0; run < 10; ++run) {
            ExperimentConfig cfg;
            cfg.key_bits = 345;
            cfg.ecc.accept_threshold = 1;
            cfg.v_sim = 1e-4 * Eigen::Matrix3d::Identity();
            cfg.w_sim = 1e-6 * Eigen::Matrix3d::Identity();
            cfg.adversary.alpha = alpha;
            cfg.seeds = derive_seeds(808, 0, static_cast<std::uint64_t>(run));
            cfg.adversary.seed = cfg.seeds.adversary;
            vals.push_back(run_episode(cfg).metrics.eve_disagreement);
        }
        return median(vals);
    };
    const double low = sweep_median(0.011);
    const double high = sweep_median(0.10);
    CHECK(high > low);
}
