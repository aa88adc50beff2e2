#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grudepth/avoidsim.hpp"
#include "grudepth/config.hpp"
#include "grudepth/dataset.hpp"
#include "grudepth/errors.hpp"
#include "grudepth/metrics.hpp"
#include "grudepth/selfcheck.hpp"
#include "grudepth/training.hpp"

namespace fs = std::filesystem;
using namespace grudepth;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string config_file;
    std::string seed;
    std::string out_dir;
    std::string dataset;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "key = value config file");
    cmd->add_option("--seed", args.seed, "RNG seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--dataset", args.dataset, "dataset root directory");
    cmd->add_option("--set", args.overrides, "override config key, KEY=VALUE")
        ->type_name("KEY=VALUE");
}

RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg = RunConfig::defaults();
    if (!args.config_file.empty()) cfg.load_file(args.config_file);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.seed.empty()) cfg.set("seed", args.seed);
    if (!args.out_dir.empty()) cfg.set("out.dir", args.out_dir);
    if (!args.dataset.empty()) cfg.set("dataset.path", args.dataset);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

int cmd_generate(const RunConfig& cfg) {
    GeneratorConfig gen;
    gen.train_episodes = cfg.get_int("gen.train_episodes");
    gen.test_episodes = cfg.get_int("gen.test_episodes");
    gen.frames_per_episode = cfg.get_int("gen.frames_per_episode");
    gen.image_h = gen.image_w = cfg.get_int("gen.image_size");
    gen.max_range = cfg.get_double("gen.max_range");
    gen.cam_pitch = cfg.get_double("gen.cam_pitch");
    gen.seed = cfg.get_u64("seed");

    const std::string root = cfg.get("dataset.path");
    write_dataset(generate_dataset(gen), root);
    cfg.write_echo(root, "generate");
    std::cout << "generated " << gen.train_episodes << " train + " << gen.test_episodes
              << " test episodes under " << root << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const Dataset ds = read_dataset(cfg.get("dataset.path"));
    const std::string out_dir = cfg.get("out.dir");
    fs::create_directories(out_dir);

    const std::string resume = cfg.get("train.resume");
    TrainConfig tc = cfg.train_config();
    std::unique_ptr<Trainer> trainer;
    long already = 0;
    if (resume.empty()) {
        trainer = std::make_unique<Trainer>(tc, cfg.network_config(), ds);
    } else {
        LoadedCheckpoint ckpt = load_checkpoint(resume);
        already = ckpt.adam.step;
        trainer = std::make_unique<Trainer>(ckpt, ds);
        // hyperparameters come from the checkpoint; only the update target
        // may be raised on the command line
        const int new_target = tc.max_updates;
        tc = ckpt.train_config;
        if (new_target > 0) tc.max_updates = new_target;
    }

    long target = tc.max_updates > 0
                      ? tc.max_updates
                      : static_cast<long>(tc.epochs) * updates_per_epoch(ds, tc.seq_len);
    const long todo = target - already;
    if (todo <= 0) throw ConfigError("checkpoint already at or past the requested update count");

    trainer->run(static_cast<int>(todo));

    const std::string ckpt_path = (fs::path(out_dir) / cfg.get("train.checkpoint")).string();
    trainer->save(ckpt_path);
    write_loss_history((fs::path(out_dir) / "loss_history.csv").string(), trainer->history());
    cfg.write_echo(out_dir, "train");

    const auto& h = trainer->history();
    std::cout << "trained " << todo << " updates, final loss " << h.back().train_loss
              << ", checkpoint " << ckpt_path << "\n";
    if (!h.empty() && h.back().train_loss >= h.front().train_loss * 50) {
        std::cerr << "training diverged\n";
        return kExitNumeric;
    }
    return 0;
}

// Sequential per-episode inference; states carry within an episode and
// reset between episodes. The ablated pass resets before every frame.
MetricsReport eval_split(const Dataset& ds, DepthNet net, bool ablate) {
    MetricsAccumulator acc;
    for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
        if (!ds.meta.is_test[i]) continue;
        const Episode& ep = ds.episodes[i];
        net.reset_state();
        for (std::size_t f = 0; f < ep.size(); ++f) {
            if (ablate) net.reset_state();
            const Tensor pred = forward_frame(net, normalize_rgb(ep.frames[f]));
            acc.add(gray_to_rgb(ep.depths[f]), gray_to_rgb(prediction_to_gray(pred)));
        }
    }
    return acc.report();
}

int cmd_eval(const RunConfig& cfg) {
    const Dataset ds = read_dataset(cfg.get("dataset.path"));
    LoadedCheckpoint ckpt = load_checkpoint(cfg.get("eval.checkpoint"));
    const std::string out_dir = cfg.get("out.dir");
    fs::create_directories(out_dir);

    const MetricsReport rep = eval_split(ds, ckpt.net, false);
    write_text((fs::path(out_dir) / "report.json").string(), rep.to_json());
    write_text((fs::path(out_dir) / "report.csv").string(), rep.to_csv());
    std::cout << "test split: mse=" << rep.mse << " ae=" << rep.ae << " rmsle=" << rep.rmsle
              << "\n";

    if (cfg.get_bool("eval.ablate_recurrence")) {
        const MetricsReport ab = eval_split(ds, ckpt.net, true);
        write_text((fs::path(out_dir) / "report_ablated.json").string(), ab.to_json());
        write_text((fs::path(out_dir) / "report_ablated.csv").string(), ab.to_csv());
        std::cout << "ablated (state reset per frame): mse=" << ab.mse << " ae=" << ab.ae
                  << " rmsle=" << ab.rmsle << "\n";
    }
    cfg.write_echo(out_dir, "eval");
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const std::string out_dir = cfg.get("out.dir");
    fs::create_directories(out_dir);

    Course course = build_course();
    course.policy.tau_stop = cfg.get_int("sim.tau_stop");

    std::unique_ptr<DepthSource> source;
    if (cfg.get_bool("sim.oracle")) {
        source = std::make_unique<OracleDepthSource>();
    } else {
        LoadedCheckpoint ckpt = load_checkpoint(cfg.get("sim.checkpoint"));
        if (ckpt.net.config.input_h != course.vehicle.image_h ||
            ckpt.net.config.input_w != course.vehicle.image_w)
            throw ConfigError("checkpointed network input size does not match the course camera");
        source = std::make_unique<NetworkDepthSource>(std::move(ckpt.net));
    }

    const std::uint64_t seed = cfg.get_u64("seed");
    const SimSummary summary =
        run_campaign(course, *source, cfg.get_int("sim.trials"), seed,
                     (fs::path(out_dir) / "trajectories").string());
    write_text((fs::path(out_dir) / "summary.json").string(), summary.to_json(seed));
    cfg.write_echo(out_dir, "simulate");
    std::cout << "finishes=" << summary.finishes << " crashes=" << summary.crashes
              << " timeouts=" << summary.timeouts << "\n";
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
    const SelfCheckResult result = run_gradcheck_suite(cfg.get_u64("seed"));
    print_gradcheck_report(result, std::cout);
    return result.pass ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent depth-from-motion engine: data generation, training, "
                 "evaluation, avoidance simulation and numerical self-checks"};
    app.require_subcommand(0, 1);

    bool dump_defaults = false;
    app.add_flag("--dump-defaults", dump_defaults, "print all config defaults and exit");

    CommonArgs gen_args, train_args, eval_args, sim_args, grad_args;
    CLI::App* generate = app.add_subcommand("generate", "render a synthetic dataset");
    add_common(generate, gen_args);

    CLI::App* train = app.add_subcommand("train", "train the recurrent depth network");
    add_common(train, train_args);
    std::string resume;
    train->add_option("--resume", resume, "checkpoint to resume from");
    int updates = -1;
    train->add_option("--updates", updates, "total optimizer updates (overrides epochs)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(eval, eval_args);
    std::string eval_ckpt;
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint file");
    bool ablate = false;
    eval->add_flag("--ablate-recurrence", ablate, "also evaluate with state reset every frame");

    CLI::App* simulate = app.add_subcommand("simulate", "closed-loop avoidance campaign");
    add_common(simulate, sim_args);
    std::string sim_ckpt;
    simulate->add_option("--checkpoint", sim_ckpt, "checkpoint file");
    bool oracle = false;
    simulate->add_flag("--oracle", oracle, "use ground-truth depth instead of a network");
    int trials = -1;
    simulate->add_option("--trials", trials, "number of randomized-start trials");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference autodiff checks");
    add_common(gradcheck, grad_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (dump_defaults) {
            std::cout << RunConfig::defaults().dump();
            return 0;
        }
        if (generate->parsed()) return cmd_generate(resolve(gen_args));
        if (train->parsed()) {
            RunConfig cfg = resolve(train_args);
            if (!resume.empty()) cfg.set("train.resume", resume);
            if (updates >= 0) cfg.set("train.max_updates", std::to_string(updates));
            return cmd_train(cfg);
        }
        if (eval->parsed()) {
            RunConfig cfg = resolve(eval_args);
            if (!eval_ckpt.empty()) cfg.set("eval.checkpoint", eval_ckpt);
            if (ablate) cfg.set("eval.ablate_recurrence", "true");
            return cmd_eval(cfg);
        }
        if (simulate->parsed()) {
            RunConfig cfg = resolve(sim_args);
            if (!sim_ckpt.empty()) cfg.set("sim.checkpoint", sim_ckpt);
            if (oracle) cfg.set("sim.oracle", "true");
            if (trials >= 0) cfg.set("sim.trials", std::to_string(trials));
            return cmd_simulate(cfg);
        }
        if (gradcheck->parsed()) return cmd_gradcheck(resolve(grad_args));
        std::cerr << app.help();
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
