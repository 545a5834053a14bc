#include "robokey/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "robokey/rng.hpp"

namespace robokey {

Seeds derive_seeds(std::uint64_t master, std::uint64_t point, std::uint64_t run) {
    Seeds s;
    s.key = derive_seed(master, {point, run, 0});
    s.process = derive_seed(master, {point, run, 1});
    s.measurement = derive_seed(master, {point, run, 2});
    s.adversary = derive_seed(master, {point, run, 3});
    return s;
}

void ExperimentConfig::validate() const {
    params.validate();
    gains.validate();
    ecc.validate();
    adversary.validate();
    if (protocol_enabled && bias.enabled()) bias.validate();
    if (laps < 1) throw std::invalid_argument("laps must be positive");
    if (!(side_length > 0.0) || !(side_duration > 0.0)) {
        throw std::invalid_argument("trajectory parameters must be positive");
    }
    if (stop.kind == StopCondition::Kind::SourceExhausted) {
        if (key_bits == 0) throw std::invalid_argument("key length must be positive");
        const double traj_steps = laps * 4 * side_duration / params.T;
        // the key must roughly fit the moving trajectory (25% hold slack)
        if (static_cast<double>(bit_steps()) > 1.25 * traj_steps + 16.0) {
            throw std::invalid_argument("key does not fit in the trajectory duration");
        }
    } else if (stop.target_bits == 0) {
        throw std::invalid_argument("target key length must be positive");
    }
}

std::uint64_t ExperimentConfig::bit_steps() const {
    if (!protocol_enabled || !bias.enabled()) return 0;
    if (stop.kind == StopCondition::Kind::TargetAccepted) return UINT64_MAX;
    return key_bits / static_cast<std::uint64_t>(ecc.k_c) *
           static_cast<std::uint64_t>(ecc.n_c);
}

SquareTrajectory ExperimentConfig::trajectory() const {
    return SquareTrajectory(side_length, side_duration, laps);
}

double tracking_cost(const std::vector<RobotState>& truth,
                     const SquareTrajectory& traj, double T) {
    if (truth.empty()) throw std::invalid_argument("tracking cost of an empty log");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double t = static_cast<double>(i + 1) * T;
        const ReferencePoint ref = traj.at(t);
        const double ex = truth[i].px - ref.pos(0);
        const double ey = truth[i].py - ref.pos(1);
        sum += std::sqrt(ex * ex + ey * ey);
    }
    return sum / static_cast<double>(truth.size());
}

EpisodeResult run_episode(const ExperimentConfig& cfg, bool diagnostics) {
    cfg.validate();
    const bool protocol = cfg.protocol_enabled && cfg.bias.enabled();
    const bool target_mode = cfg.stop.kind == StopCondition::Kind::TargetAccepted;

    EpisodeResult out;
    out.key_source = protocol && !target_mode ? random_key(cfg.seeds.key, cfg.key_bits)
                                              : BitString{};

    ControllerConfig ccfg;
    ccfg.params = cfg.params;
    ccfg.gains = cfg.gains;
    ccfg.bias = cfg.bias;
    ccfg.ecc = cfg.ecc;
    ccfg.trajectory = cfg.trajectory();
    ccfg.bit_steps = cfg.bit_steps();
    ccfg.stop = cfg.stop;
    ccfg.xi_initial = cfg.xi_initial;
    ccfg.protocol_enabled = protocol;
    ControllerParty controller(ccfg);
    if (diagnostics) controller.enable_diagnostics();

    RobotConfig rcfg;
    rcfg.params = cfg.params;
    rcfg.ecc = cfg.ecc;
    rcfg.key_source = out.key_source;
    rcfg.initial_state = RobotState{};
    rcfg.process_noise = cfg.w_sim;
    rcfg.measurement_noise = cfg.v_sim;
    rcfg.process_seed = cfg.seeds.process;
    rcfg.measurement_seed = cfg.seeds.measurement;
    rcfg.key_seed = cfg.seeds.key;
    rcfg.saturation = cfg.saturation;
    rcfg.protocol_enabled = protocol;
    rcfg.auto_extend_key = protocol && target_mode;
    RobotParty robot(rcfg);

    out.transcript = run_lockstep(controller, robot);
    write_config_header(out.transcript, cfg);

    out.key_robot = robot.key();
    out.key_controller = controller.key();
    out.truth = robot.truth();
    if (target_mode) out.key_source = robot.key_source();
    if (diagnostics) {
        out.bits_sent = robot.bits_sent();
        out.delta_log = controller.delta_log();
    }

    if (protocol) {
        const AdversaryModel model = sample_adversary_model(
            cfg.params, AdversaryConfig{cfg.adversary.alpha, cfg.adversary.targets,
                                        cfg.seeds.adversary});
        out.key_eve = eve_decode_transcript(out.transcript, model, cfg.ecc, cfg.bit_steps());
    }

    EpisodeMetrics m;
    m.steps = out.truth.size();
    m.kc_len = out.key_controller.size();
    const std::uint64_t total = controller.codewords_total();
    m.accept_rate = total == 0 ? 0.0
                               : static_cast<double>(controller.codewords_accepted()) /
                                     static_cast<double>(total);
    if (!out.key_controller.empty()) {
        const auto errs = hamming_distance(out.key_robot, out.key_controller);
        m.correct_rate = 1.0 - static_cast<double>(errs) /
                                   static_cast<double>(out.key_controller.size());
        m.eve_disagreement = 100.0 *
            static_cast<double>(hamming_distance(out.key_eve, out.key_controller)) /
            static_cast<double>(out.key_controller.size());
    }
    m.j_x = tracking_cost(out.truth, ccfg.trajectory, cfg.params.T);
    out.metrics = m;
    out.keys_verified = verify_keys(make_key_material(out.key_robot),
                                    make_key_material(out.key_controller));
    return out;
}

namespace {

std::string matrix_text(const Eigen::Matrix3d& m) {
    std::string out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i || j) out += ',';
            out += format_double(m(i, j));
        }
    }
    return out;
}

Eigen::Matrix3d matrix_from_text(const std::string& s) {
    Eigen::Matrix3d m;
    std::stringstream ss(s);
    std::string field;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (!std::getline(ss, field, ',')) {
                throw std::invalid_argument("matrix header needs 9 fields");
            }
            m(i, j) = parse_double(field, 0);
        }
    }
    return m;
}

std::string targets_text(const AdversaryConfig::Targets& t) {
    std::string s;
    if (t.r) s += 'r';
    if (t.D) s += 'D';
    if (t.W) s += 'W';
    if (t.V) s += 'V';
    return s;
}

AdversaryConfig::Targets targets_from_text(const std::string& s) {
    AdversaryConfig::Targets t{false, false, false, false};
    for (char c : s) {
        if (c == 'r') t.r = true;
        else if (c == 'D') t.D = true;
        else if (c == 'W') t.W = true;
        else if (c == 'V') t.V = true;
        else throw std::invalid_argument("unknown adversary target");
    }
    return t;
}

std::string require_header(const Transcript& t, const std::string& key) {
    if (auto v = t.header_value(key)) return *v;
    throw std::invalid_argument("transcript header misses key: " + key);
}

}  // namespace

std::string sha256_hex(std::string_view text) {
    unsigned char digest[32];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hexd[digest[i] >> 4]);
        out.push_back(hexd[digest[i] & 0xF]);
    }
    return out;
}

void write_config_header(Transcript& t, const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> h;
    h.emplace_back("format", "robokey-transcript-v1");
    h.emplace_back("T", format_double(cfg.params.T));
    h.emplace_back("r", format_double(cfg.params.r));
    h.emplace_back("D", format_double(cfg.params.D));
    h.emplace_back("omega_max", format_double(cfg.params.omega_max));
    h.emplace_back("output_map", output_map_tag(cfg.params.output_map));
    h.emplace_back("w_obs", matrix_text(cfg.params.W));
    h.emplace_back("v_obs", matrix_text(cfg.params.V));
    h.emplace_back("w_sim", matrix_text(cfg.w_sim));
    h.emplace_back("v_sim", matrix_text(cfg.v_sim));
    h.emplace_back("kp_x", format_double(cfg.gains.kp_x));
    h.emplace_back("kp_y", format_double(cfg.gains.kp_y));
    h.emplace_back("kd_x", format_double(cfg.gains.kd_x));
    h.emplace_back("kd_y", format_double(cfg.gains.kd_y));
    h.emplace_back("xi_min", format_double(cfg.gains.xi_min));
    h.emplace_back("xi_initial", format_double(cfg.xi_initial));
    h.emplace_back("delta_v", format_double(cfg.bias.delta_v));
    h.emplace_back("delta_omega", format_double(cfg.bias.delta_omega));
    h.emplace_back("n_c", std::to_string(cfg.ecc.n_c));
    h.emplace_back("k_c", std::to_string(cfg.ecc.k_c));
    h.emplace_back("d_c", std::to_string(cfg.ecc.d_c));
    h.emplace_back("accept_threshold", std::to_string(cfg.ecc.accept_threshold));
    h.emplace_back("alpha", format_double(cfg.adversary.alpha));
    h.emplace_back("adversary_targets", targets_text(cfg.adversary.targets));
    h.emplace_back("key_bits", std::to_string(cfg.key_bits));
    h.emplace_back("laps", std::to_string(cfg.laps));
    h.emplace_back("side_length", format_double(cfg.side_length));
    h.emplace_back("side_duration", format_double(cfg.side_duration));
    h.emplace_back("seed_key", std::to_string(cfg.seeds.key));
    h.emplace_back("seed_process", std::to_string(cfg.seeds.process));
    h.emplace_back("seed_measurement", std::to_string(cfg.seeds.measurement));
    h.emplace_back("seed_adversary", std::to_string(cfg.seeds.adversary));
    h.emplace_back("saturation", cfg.saturation ? "1" : "0");
    h.emplace_back("protocol", cfg.protocol_enabled && cfg.bias.enabled() ? "1" : "0");
    h.emplace_back("stop",
                   cfg.stop.kind == StopCondition::Kind::SourceExhausted ? "source" : "target");
    h.emplace_back("target_bits", std::to_string(cfg.stop.target_bits));
    h.emplace_back("digest_algo", "sha-256");

    std::string canon;
    for (const auto& [k, v] : h) {
        canon += k;
        canon += '=';
        canon += v;
        canon += '\n';
    }
    h.emplace_back("config_digest", sha256_hex(canon));

    // header goes in front of anything already present
    t.header.insert(t.header.begin(), h.begin(), h.end());
}

ExperimentConfig config_from_header(const Transcript& t) {
    ExperimentConfig cfg;
    cfg.params.T = parse_double(require_header(t, "T"), 0);
    cfg.params.r = parse_double(require_header(t, "r"), 0);
    cfg.params.D = parse_double(require_header(t, "D"), 0);
    cfg.params.omega_max = parse_double(require_header(t, "omega_max"), 0);
    cfg.params.output_map = parse_output_map(require_header(t, "output_map"));
    cfg.params.W = matrix_from_text(require_header(t, "w_obs"));
    cfg.params.V = matrix_from_text(require_header(t, "v_obs"));
    cfg.w_sim = matrix_from_text(require_header(t, "w_sim"));
    cfg.v_sim = matrix_from_text(require_header(t, "v_sim"));
    cfg.gains.kp_x = parse_double(require_header(t, "kp_x"), 0);
    cfg.gains.kp_y = parse_double(require_header(t, "kp_y"), 0);
    cfg.gains.kd_x = parse_double(require_header(t, "kd_x"), 0);
    cfg.gains.kd_y = parse_double(require_header(t, "kd_y"), 0);
    cfg.gains.xi_min = parse_double(require_header(t, "xi_min"), 0);
    cfg.xi_initial = parse_double(require_header(t, "xi_initial"), 0);
    cfg.bias.delta_v = parse_double(require_header(t, "delta_v"), 0);
    cfg.bias.delta_omega = parse_double(require_header(t, "delta_omega"), 0);
    cfg.ecc.n_c = static_cast<int>(parse_double(require_header(t, "n_c"), 0));
    cfg.ecc.k_c = static_cast<int>(parse_double(require_header(t, "k_c"), 0));
    cfg.ecc.d_c = static_cast<int>(parse_double(require_header(t, "d_c"), 0));
    cfg.ecc.accept_threshold =
        static_cast<int>(parse_double(require_header(t, "accept_threshold"), 0));
    cfg.adversary.alpha = parse_double(require_header(t, "alpha"), 0);
    cfg.adversary.targets = targets_from_text(require_header(t, "adversary_targets"));
    cfg.key_bits = static_cast<std::uint64_t>(parse_double(require_header(t, "key_bits"), 0));
    cfg.laps = static_cast<int>(parse_double(require_header(t, "laps"), 0));
    cfg.side_length = parse_double(require_header(t, "side_length"), 0);
    cfg.side_duration = parse_double(require_header(t, "side_duration"), 0);
    cfg.seeds.key = std::stoull(require_header(t, "seed_key"));
    cfg.seeds.process = std::stoull(require_header(t, "seed_process"));
    cfg.seeds.measurement = std::stoull(require_header(t, "seed_measurement"));
    cfg.seeds.adversary = std::stoull(require_header(t, "seed_adversary"));
    cfg.saturation = require_header(t, "saturation") == "1";
    cfg.protocol_enabled = require_header(t, "protocol") == "1";
    cfg.stop.kind = require_header(t, "stop") == "target"
                        ? StopCondition::Kind::TargetAccepted
                        : StopCondition::Kind::SourceExhausted;
    cfg.stop.target_bits = std::stoull(require_header(t, "target_bits"));
    cfg.adversary.seed = cfg.seeds.adversary;
    return cfg;
}

ReplayResult replay_controller(const Transcript& t) {
    const ExperimentConfig cfg = config_from_header(t);
    BitDecoder decoder(cfg.params, cfg.bit_steps());
    ControllerSession session(cfg.ecc);
    std::deque<Ack> regenerated;
    for (const auto& msg : t.records) {
        if (const auto* cm = std::get_if<ControlMessage>(&msg)) {
            if (cm->ack.kind != AckKind::None) {
                if (regenerated.empty() || regenerated.front().kind != cm->ack.kind ||
                    regenerated.front().seq != cm->ack.seq) {
                    throw protocol_error("transcript verdicts diverge from re-decoded verdicts");
                }
                regenerated.pop_front();
            }
            decoder.on_control(cm->pair());
        } else {
            const auto& mm = std::get<MeasurementMessage>(msg);
            if (auto est = decoder.on_measurement(mm.step_index, mm.y)) {
                if (auto ack = session.push_bit(*est)) regenerated.push_back(*ack);
            }
        }
    }
    ReplayResult r;
    r.key = session.key_out();
    r.digest = digest_hex(make_key_material(r.key));
    r.codewords_total = session.codewords_total();
    r.codewords_accepted = session.codewords_accepted();
    return r;
}

ReplayResult replay_eve(const Transcript& t) {
    const ExperimentConfig cfg = config_from_header(t);
    const AdversaryModel model = sample_adversary_model(cfg.params, cfg.adversary);
    ReplayResult r;
    r.key = eve_decode_transcript(t, model, cfg.ecc, cfg.bit_steps());
    r.digest = digest_hex(make_key_material(r.key));
    return r;
}

std::string csv_header() {
    return "kind,point,run,delta_v,alpha,seed_key,seed_process,seed_measurement,"
           "seed_adversary,accept_rate,correct_rate,eve_disagreement,j_x,steps,kc_len\n";
}

std::string csv_data_row(const SweepRow& row) {
    std::string csv = "data,";
    csv += std::to_string(row.point);
    csv += ',';
    csv += std::to_string(row.run);
    csv += ',';
    csv += format_double(row.delta_v);
    csv += ',';
    csv += format_double(row.alpha);
    csv += ',';
    csv += std::to_string(row.seeds.key);
    csv += ',';
    csv += std::to_string(row.seeds.process);
    csv += ',';
    csv += std::to_string(row.seeds.measurement);
    csv += ',';
    csv += std::to_string(row.seeds.adversary);
    csv += ',';
    csv += format_double(row.metrics.accept_rate);
    csv += ',';
    csv += format_double(row.metrics.correct_rate);
    csv += ',';
    csv += format_double(row.metrics.eve_disagreement);
    csv += ',';
    csv += format_double(row.metrics.j_x);
    csv += ',';
    csv += std::to_string(row.metrics.steps);
    csv += ',';
    csv += std::to_string(row.metrics.kc_len);
    csv += '\n';
    return csv;
}

namespace {

void append_summary_row(std::string& csv, const char* kind, int point, double dv,
                        double alpha, const EpisodeMetrics& m) {
    csv += kind;
    csv += ',';
    csv += std::to_string(point);
    csv += ",,";
    csv += format_double(dv);
    csv += ',';
    csv += format_double(alpha);
    csv += ",,,,,";
    csv += format_double(m.accept_rate);
    csv += ',';
    csv += format_double(m.correct_rate);
    csv += ',';
    csv += format_double(m.eve_disagreement);
    csv += ',';
    csv += format_double(m.j_x);
    csv += ',';
    csv += std::to_string(m.steps);
    csv += ',';
    csv += std::to_string(m.kc_len);
    csv += '\n';
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EpisodeMetrics reduce(const std::vector<EpisodeMetrics>& ms,
                      double (*stat)(std::vector<double>)) {
    auto take = [&](double (*get)(const EpisodeMetrics&)) {
        std::vector<double> v;
        v.reserve(ms.size());
        for (const auto& m : ms) v.push_back(get(m));
        return stat(std::move(v));
    };
    EpisodeMetrics out;
    out.accept_rate = take([](const EpisodeMetrics& m) { return m.accept_rate; });
    out.correct_rate = take([](const EpisodeMetrics& m) { return m.correct_rate; });
    out.eve_disagreement = take([](const EpisodeMetrics& m) { return m.eve_disagreement; });
    out.j_x = take([](const EpisodeMetrics& m) { return m.j_x; });
    out.steps = static_cast<std::uint64_t>(
        take([](const EpisodeMetrics& m) { return static_cast<double>(m.steps); }));
    out.kc_len = static_cast<std::uint64_t>(
        take([](const EpisodeMetrics& m) { return static_cast<double>(m.kc_len); }));
    return out;
}

double min_of(std::vector<double> v) { return *std::min_element(v.begin(), v.end()); }
double max_of(std::vector<double> v) { return *std::max_element(v.begin(), v.end()); }

std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        g.push_back(lo);
        return g;
    }
    for (int i = 0; i < points; ++i) {
        g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return g;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepOptions& opts,
                      bool vary_alpha) {
    if (opts.points < 1 || opts.runs < 1) {
        throw std::invalid_argument("sweep needs at least one point and one run");
    }
    SweepResult result;
    result.csv = csv_header();
    const std::vector<double> grid = linspace(opts.min, opts.max, opts.points);
    std::string summary_rows;
    for (int pi = 0; pi < opts.points; ++pi) {
        std::vector<EpisodeMetrics> point_metrics;
        for (int ri = 0; ri < opts.runs; ++ri) {
            ExperimentConfig cfg = base;
            if (vary_alpha) {
                cfg.adversary.alpha = grid[static_cast<std::size_t>(pi)];
            } else {
                cfg.bias.delta_v = grid[static_cast<std::size_t>(pi)];
            }
            cfg.seeds = derive_seeds(opts.master_seed, static_cast<std::uint64_t>(pi),
                                     static_cast<std::uint64_t>(ri));
            cfg.adversary.seed = cfg.seeds.adversary;
            const EpisodeResult ep = run_episode(cfg);
            SweepRow row{pi, ri, cfg.bias.delta_v, cfg.adversary.alpha, cfg.seeds, ep.metrics};
            result.csv += csv_data_row(row);
            result.rows.push_back(row);
            point_metrics.push_back(ep.metrics);
        }
        SweepSummary s;
        s.point = pi;
        s.delta_v = vary_alpha ? base.bias.delta_v : grid[static_cast<std::size_t>(pi)];
        s.alpha = vary_alpha ? grid[static_cast<std::size_t>(pi)] : base.adversary.alpha;
        s.median = reduce(point_metrics, median_of);
        s.lo = reduce(point_metrics, min_of);
        s.hi = reduce(point_metrics, max_of);
        result.summaries.push_back(s);
        append_summary_row(summary_rows, "median", pi, s.delta_v, s.alpha, s.median);
        append_summary_row(summary_rows, "min", pi, s.delta_v, s.alpha, s.lo);
        append_summary_row(summary_rows, "max", pi, s.delta_v, s.alpha, s.hi);
    }
    result.csv += summary_rows;
    return result;
}

}  // namespace

SweepResult sweep_delta_v(const ExperimentConfig& base, const SweepOptions& opts) {
    return run_sweep(base, opts, /*vary_alpha=*/false);
}

SweepResult sweep_alpha(const ExperimentConfig& base, const SweepOptions& opts) {
    return run_sweep(base, opts, /*vary_alpha=*/true);
}

}  // namespace robokey
