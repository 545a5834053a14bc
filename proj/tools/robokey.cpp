// Command-line front end: single episodes, bias and adversary sweeps,
// socket deployment of the three roles, and offline transcript re-decoding.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "robokey/harness.hpp"
#include "robokey/socket_transport.hpp"

namespace {

using namespace robokey;

// Flat key=value config file; command-line flags override file entries.
std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line is not key=value: " + line);
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Shared experiment options; every flag has a config-file key of the same
// name (without the leading dashes).
struct ExperimentFlags {
    double delta_v = 0.035;
    double delta_omega = 0.0;
    std::uint64_t key_bits = 345;
    int ecc_rep = 3;
    int accept_threshold = 0;
    double alpha = 0.0;
    std::uint64_t seed = 1;
    double noise_w = 8e-6;
    double noise_v = 1e-6;
    int laps = 3;
    std::uint64_t target_bits = 0;
    std::string config_path;

    std::vector<CLI::Option*> opts;

    void attach(CLI::App* cmd) {
        opts = {
            cmd->add_option("--delta-v", delta_v, "linear-velocity bias [m/s]"),
            cmd->add_option("--delta-omega", delta_omega, "angular-velocity bias [rad/s]"),
            cmd->add_option("--key-bits", key_bits, "source key length"),
            cmd->add_option("--ecc-rep", ecc_rep, "repetition-code length (odd)"),
            cmd->add_option("--accept-threshold", accept_threshold,
                            "max accepted decoding distance"),
            cmd->add_option("--alpha", alpha, "adversary knowledge error bound"),
            cmd->add_option("--seed", seed, "master seed"),
            cmd->add_option("--noise-w", noise_w, "injected process-noise variance"),
            cmd->add_option("--noise-v", noise_v, "injected measurement-noise variance"),
            cmd->add_option("--laps", laps, "laps of the square trajectory"),
            cmd->add_option("--target-bits", target_bits,
                            "stop after this many accepted bits (0: consume the source key)"),
        };
        cmd->add_option("--config", config_path, "flat key=value config file");
    }

    // Apply config-file values to options not given on the command line.
    void apply_config() {
        if (config_path.empty()) return;
        const auto kv = load_config_file(config_path);
        for (CLI::Option* opt : opts) {
            const std::string key = opt->get_name().substr(2);
            if (opt->count() > 0) continue;
            const auto it = kv.find(key);
            if (it == kv.end()) continue;
            opt->add_result(it->second);
            opt->run_callback();
        }
    }

    ExperimentConfig to_config() const {
        ExperimentConfig cfg;
        cfg.bias.delta_v = delta_v;
        cfg.bias.delta_omega = delta_omega;
        cfg.key_bits = key_bits;
        cfg.ecc.n_c = ecc_rep;
        cfg.ecc.d_c = ecc_rep;
        cfg.ecc.accept_threshold = accept_threshold;
        cfg.adversary.alpha = alpha;
        cfg.laps = laps;
        cfg.w_sim = noise_w * Eigen::Matrix3d::Identity();
        cfg.v_sim = noise_v * Eigen::Matrix3d::Identity();
        cfg.seeds = derive_seeds(seed, 0, 0);
        cfg.adversary.seed = cfg.seeds.adversary;
        if (target_bits > 0) {
            cfg.stop.kind = StopCondition::Kind::TargetAccepted;
            cfg.stop.target_bits = target_bits;
        }
        cfg.protocol_enabled = cfg.bias.enabled();
        return cfg;
    }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

void print_metrics(const EpisodeMetrics& m) {
    std::cout << "steps=" << m.steps << " accept_rate=" << format_double(m.accept_rate)
              << " correct_rate=" << format_double(m.correct_rate)
              << " eve_disagreement=" << format_double(m.eve_disagreement)
              << " j_x=" << format_double(m.j_x) << " kc_len=" << m.kc_len << "\n";
}

int cmd_run(const ExperimentFlags& flags, const std::string& out_path,
            const std::string& transcript_path) {
    const ExperimentConfig cfg = flags.to_config();
    const EpisodeResult ep = run_episode(cfg);
    print_metrics(ep.metrics);
    std::cout << "key_robot_digest=" << digest_hex(make_key_material(ep.key_robot))
              << "\nkey_controller_digest=" << digest_hex(make_key_material(ep.key_controller))
              << "\nkeys_verified=" << (ep.keys_verified ? "1" : "0") << "\n";
    if (!out_path.empty()) {
        SweepRow row{0, 0, cfg.bias.delta_v, cfg.adversary.alpha, cfg.seeds, ep.metrics};
        write_file(out_path, csv_header() + csv_data_row(row));
    }
    if (!transcript_path.empty()) ep.transcript.save(transcript_path);
    return 0;
}

int cmd_sweep(const ExperimentFlags& flags, SweepOptions opts, bool alpha_sweep,
              const std::string& out_path) {
    ExperimentConfig base = flags.to_config();
    opts.master_seed = flags.seed;
    const SweepResult result =
        alpha_sweep ? sweep_alpha(base, opts) : sweep_delta_v(base, opts);
    if (!out_path.empty()) {
        write_file(out_path, result.csv);
    } else {
        std::cout << result.csv;
    }
    for (const auto& s : result.summaries) {
        std::cout << "point=" << s.point << " delta_v=" << format_double(s.delta_v)
                  << " alpha=" << format_double(s.alpha)
                  << " median_accept=" << format_double(s.median.accept_rate)
                  << " median_correct=" << format_double(s.median.correct_rate)
                  << " median_eve=" << format_double(s.median.eve_disagreement)
                  << " median_jx=" << format_double(s.median.j_x) << "\n";
    }
    return 0;
}

int cmd_serve(const ExperimentFlags& flags, const std::string& role,
              const std::string& endpoint_text, const std::string& out_path) {
    const ExperimentConfig cfg = flags.to_config();
    const Endpoint ep = parse_endpoint(endpoint_text);
    Transcript transcript;

    if (role == "robot") {
        RobotConfig rcfg;
        rcfg.params = cfg.params;
        rcfg.ecc = cfg.ecc;
        rcfg.key_source = cfg.stop.kind == StopCondition::Kind::TargetAccepted
                              ? BitString{}
                              : random_key(cfg.seeds.key, cfg.key_bits);
        rcfg.process_noise = cfg.w_sim;
        rcfg.measurement_noise = cfg.v_sim;
        rcfg.process_seed = cfg.seeds.process;
        rcfg.measurement_seed = cfg.seeds.measurement;
        rcfg.key_seed = cfg.seeds.key;
        rcfg.saturation = cfg.saturation;
        rcfg.protocol_enabled = cfg.protocol_enabled && cfg.bias.enabled();
        rcfg.auto_extend_key = rcfg.protocol_enabled &&
                               cfg.stop.kind == StopCondition::Kind::TargetAccepted;
        RobotParty robot(rcfg);
        transcript = serve_robot(ep, robot, [](std::uint16_t port) {
            std::cout << "LISTENING," << port << std::endl;
        });
        std::cout << "key_robot_digest=" << digest_hex(make_key_material(robot.key()))
                  << "\n";
    } else if (role == "controller") {
        ControllerConfig ccfg;
        ccfg.params = cfg.params;
        ccfg.gains = cfg.gains;
        ccfg.bias = cfg.bias;
        ccfg.ecc = cfg.ecc;
        ccfg.trajectory = cfg.trajectory();
        ccfg.bit_steps = cfg.bit_steps();
        ccfg.stop = cfg.stop;
        ccfg.xi_initial = cfg.xi_initial;
        ccfg.protocol_enabled = cfg.protocol_enabled && cfg.bias.enabled();
        ControllerParty controller(ccfg);
        try {
            run_controller_client(ep, controller, transcript);
        } catch (...) {
            // flush whatever was exchanged before the session broke
            if (!out_path.empty()) {
                write_config_header(transcript, cfg);
                transcript.save(out_path);
            }
            throw;
        }
        std::cout << "key_controller_digest="
                  << digest_hex(make_key_material(controller.key())) << "\n";
    } else if (role == "tap") {
        transcript = run_tap_client(ep);
    } else {
        throw CLI::ValidationError("--role", "must be controller, robot or tap");
    }

    if (!out_path.empty()) {
        write_config_header(transcript, cfg);
        transcript.save(out_path);
    }
    return 0;
}

int cmd_replay(const std::string& transcript_path, const std::string& role) {
    const Transcript t = Transcript::load(transcript_path);
    ReplayResult r;
    if (role == "controller") {
        r = replay_controller(t);
        std::cout << "role=controller codewords=" << r.codewords_total
                  << " accepted=" << r.codewords_accepted;
    } else if (role == "eve") {
        r = replay_eve(t);
        std::cout << "role=eve";
    } else {
        throw CLI::ValidationError("--role", "must be controller or eve");
    }
    std::cout << " key_len=" << r.key.size() << " digest=" << r.digest << "\n"
              << "key=" << r.key << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"observer-based key agreement simulator and experiment harness"};
    app.require_subcommand(1);

    ExperimentFlags run_flags, dv_flags, a_flags, serve_flags;
    std::string run_out, run_transcript;
    auto* run = app.add_subcommand("run", "run one episode over the lockstep channel");
    run_flags.attach(run);
    run->add_option("--out", run_out, "write a one-row metrics CSV here");
    run->add_option("--transcript", run_transcript, "write the session transcript here");

    SweepOptions dv_opts;
    auto* dv = app.add_subcommand("sweep-dv", "bias sweep with per-point summaries");
    dv_flags.attach(dv);
    std::string dv_out;
    dv->add_option("--min", dv_opts.min, "lowest delta-v");
    dv->add_option("--max", dv_opts.max, "highest delta-v");
    dv->add_option("--points", dv_opts.points, "grid points");
    dv->add_option("--runs", dv_opts.runs, "runs per point");
    dv->add_option("--out", dv_out, "CSV output path");

    SweepOptions a_opts;
    a_opts.min = 0.0;
    a_opts.max = 0.10;
    auto* sa = app.add_subcommand("sweep-a", "adversary-knowledge sweep at fixed bias");
    a_flags.attach(sa);
    std::string a_out;
    double alpha_max = 0.10;
    sa->add_option("--alpha-max", alpha_max, "highest alpha");
    sa->add_option("--points", a_opts.points, "grid points");
    sa->add_option("--runs", a_opts.runs, "runs per point");
    sa->add_option("--out", a_out, "CSV output path");

    std::string serve_role, serve_endpoint, serve_out;
    auto* serve = app.add_subcommand("serve", "run one role over a stream socket");
    serve_flags.attach(serve);
    serve->add_option("--role", serve_role, "controller, robot or tap")->required();
    serve->add_option("--endpoint", serve_endpoint, "host:port (port 0: ephemeral)")
        ->required();
    serve->add_option("--out", serve_out, "write this role's transcript here");

    std::string replay_transcript, replay_role;
    auto* replay = app.add_subcommand("replay", "re-decode a transcript offline");
    replay->add_option("--transcript", replay_transcript, "transcript path")->required();
    replay->add_option("--role", replay_role, "controller or eve")->required();

    try {
        app.parse(argc, argv);
        run_flags.apply_config();
        dv_flags.apply_config();
        a_flags.apply_config();
        serve_flags.apply_config();

        if (run->parsed()) return cmd_run(run_flags, run_out, run_transcript);
        if (dv->parsed()) return cmd_sweep(dv_flags, dv_opts, false, dv_out);
        if (sa->parsed()) {
            a_opts.max = alpha_max;
            return cmd_sweep(a_flags, a_opts, true, a_out);
        }
        if (serve->parsed()) return cmd_serve(serve_flags, serve_role, serve_endpoint, serve_out);
        if (replay->parsed()) return cmd_replay(replay_transcript, replay_role);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
