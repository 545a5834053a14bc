#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robokey/adversary.hpp"
#include "robokey/control.hpp"
#include "robokey/models.hpp"
#include "robokey/parties.hpp"
#include "robokey/protocol.hpp"
#include "robokey/transport.hpp"

namespace robokey {

struct Seeds {
    std::uint64_t key = 1;
    std::uint64_t process = 2;
    std::uint64_t measurement = 3;
    std::uint64_t adversary = 4;
};

/// Child seeds for sweep point/run (i, j), derived from the master seed by
/// the fixed chain documented in the README.
Seeds derive_seeds(std::uint64_t master, std::uint64_t point, std::uint64_t run);

/// Everything one episode needs. `params` carries the model knowledge the
/// estimators use; `w_sim`/`v_sim` are the covariances of the noise the
/// simulation actually injects, which may differ.
struct ExperimentConfig {
    ModelParams params;
    ControllerGains gains;
    BiasConfig bias;
    EccConfig ecc;
    AdversaryConfig adversary;
    std::uint64_t key_bits = 345;
    int laps = 3;
    double side_length = 1.0;
    double side_duration = 17.0;
    Seeds seeds;
    Eigen::Matrix3d w_sim = 8e-6 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d v_sim = 1e-6 * Eigen::Matrix3d::Identity();
    StopCondition stop;
    bool saturation = true;
    double xi_initial = 0.01;
    bool protocol_enabled = true;  // false: plain tracking baseline

    void validate() const;
    std::uint64_t bit_steps() const;
    SquareTrajectory trajectory() const;
};

struct EpisodeMetrics {
    double accept_rate = 0.0;       // accepted / decided codewords
    double correct_rate = 1.0;      // accepted substrings matching transmitted
    double eve_disagreement = 0.0;  // percent bit difference K_a vs K_c
    double j_x = 0.0;               // mean position tracking error [m]
    std::uint64_t steps = 0;
    std::uint64_t kc_len = 0;
};

struct EpisodeResult {
    Transcript transcript;
    BitString key_source;
    BitString key_robot;
    BitString key_controller;
    BitString key_eve;
    std::vector<RobotState> truth;  // ground-truth side log, x(1..N)
    EpisodeMetrics metrics;
    bool keys_verified = false;

    // diagnostics, filled on request
    BitString bits_sent;
    std::vector<Eigen::Vector2d> delta_log;
};

/// Run one full episode over the lockstep channel and compute all metrics.
/// Fully deterministic given the seeds.
EpisodeResult run_episode(const ExperimentConfig& cfg, bool diagnostics = false);

/// Mean Euclidean position error against the reference, over the whole
/// side log. Throws on an empty log.
double tracking_cost(const std::vector<RobotState>& truth,
                     const SquareTrajectory& traj, double T);

struct SweepOptions {
    double min = 0.02;
    double max = 0.045;
    int points = 10;
    int runs = 10;
    std::uint64_t master_seed = 1;
};

struct SweepRow {
    int point = 0;
    int run = 0;
    double delta_v = 0.0;
    double alpha = 0.0;
    Seeds seeds;
    EpisodeMetrics metrics;
};

struct SweepSummary {
    int point = 0;
    double delta_v = 0.0;
    double alpha = 0.0;
    EpisodeMetrics median;
    EpisodeMetrics lo;
    EpisodeMetrics hi;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summaries;
    std::string csv;  // data rows then per-point median/min/max rows
};

/// Fixed CSV schema shared by sweeps and single runs.
std::string csv_header();
std::string csv_data_row(const SweepRow& row);

/// Bias sweep: fresh child seeds per (point, run); emits one data row per
/// episode plus summary rows for boxplot reconstruction.
SweepResult sweep_delta_v(const ExperimentConfig& base, const SweepOptions& opts);

/// Adversary-knowledge sweep at fixed bias; same row layout.
SweepResult sweep_alpha(const ExperimentConfig& base, const SweepOptions& opts);

/// Session header (parameters, seeds, config digest) for a transcript.
void write_config_header(Transcript& t, const ExperimentConfig& cfg);
ExperimentConfig config_from_header(const Transcript& t);

struct ReplayResult {
    BitString key;
    std::string digest;
    std::uint64_t codewords_total = 0;
    std::uint64_t codewords_accepted = 0;
};

/// Re-decode a transcript with the controller's model knowledge. Verifies
/// that the regenerated verdicts match the ones recorded on the wire.
ReplayResult replay_controller(const Transcript& t);

/// Re-decode a transcript with the adversary's model knowledge (resampled
/// deterministically from the header).
ReplayResult replay_eve(const Transcript& t);

/// SHA-256 hex digest of arbitrary text (config digests etc.).
std::string sha256_hex(std::string_view text);

}  // namespace robokey
