// Acceptance gate: one line per criterion, nonzero exit on any failure.
// The slow criteria (training runs, campaigns) dominate the runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grudepth/avoidsim.hpp"
#include "grudepth/dataset.hpp"
#include "grudepth/metrics.hpp"
#include "grudepth/network.hpp"
#include "grudepth/selfcheck.hpp"
#include "grudepth/training.hpp"
#include "naive_conv.hpp"

namespace fs = std::filesystem;
using namespace grudepth;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Criterion {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
};

NetworkConfig eighth_width(std::uint64_t seed) {
    NetworkConfig cfg;
    cfg.width_num = 1;
    cfg.width_den = 8;
    cfg.input_h = 32;
    cfg.input_w = 32;
    cfg.seed = seed;
    return cfg;
}

Dataset to_dataset(const GeneratedSet& set) {
    Dataset ds;
    ds.meta.image_h = set.config.image_h;
    ds.meta.image_w = set.config.image_w;
    ds.meta.max_range = set.config.max_range;
    for (std::size_t i = 0; i < set.episodes.size(); ++i) {
        ds.meta.episode_ids.push_back(set.episodes[i].id);
        ds.meta.frame_counts.push_back(static_cast<int>(set.episodes[i].size()));
        ds.meta.is_test.push_back(set.is_test[i]);
    }
    ds.episodes = set.episodes;
    return ds;
}

// Mean AE over a list of episodes; ablate = hidden state zeroed before
// every frame instead of once per episode.
double episode_ae(DepthNet net, const std::vector<const Episode*>& episodes, bool ablate) {
    MetricsAccumulator acc;
    for (const Episode* ep : episodes) {
        net.reset_state();
        for (std::size_t f = 0; f < ep->size(); ++f) {
            if (ablate) net.reset_state();
            Tensor pred = forward_frame(net, normalize_rgb(ep->frames[f]));
            acc.add(ep->depths[f], prediction_to_gray(pred));
        }
    }
    return acc.report().ae;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --- criterion bodies ---------------------------------------------------

Criterion c1_gradients() {
    Criterion c{1, "gradient correctness", false, ""};
    const auto t0 = clock_type::now();
    SelfCheckResult r = run_gradcheck_suite(0);
    const double elapsed = seconds_since(t0);

    double worst_primitive = 0;
    for (const auto& [name, rep] : r.primitives)
        worst_primitive = std::max(worst_primitive, rep.max_rel_err);
    c.pass = r.pass && worst_primitive < 1e-4 && r.end_to_end.max_rel_err < 1e-3 &&
             elapsed < 120.0;
    c.detail = "primitives max_rel_err=" + fmt(worst_primitive) +
               " end_to_end=" + fmt(r.end_to_end.max_rel_err) + " in " + fmt(elapsed) + "s";
    return c;
}

Criterion c2_conv_oracle() {
    Criterion c{2, "convolution oracle", false, ""};
    const auto t0 = clock_type::now();
    Rng rng(0x5eedc0de);
    double worst = 0;
    int shapes = 0;
    while (shapes < 200) {
        const int C = 1 + static_cast<int>(rng.uniform_int(12));
        const int O = 1 + static_cast<int>(rng.uniform_int(12));
        const int H = 1 + static_cast<int>(rng.uniform_int(20));
        const int W = 1 + static_cast<int>(rng.uniform_int(20));
        const int k = rng.uniform() < 0.4 ? 1 : 3;
        const int stride = 1 + static_cast<int>(rng.uniform_int(2));
        const int pad = k == 3 ? static_cast<int>(rng.uniform_int(2)) : 0;
        if ((H + 2 * pad - k) / stride + 1 < 1 || (W + 2 * pad - k) / stride + 1 < 1) continue;
        ++shapes;

        ConvSpec spec{k, k, stride, pad, C, O};
        Tensor input = Tensor::uniform({C, H, W}, rng, -1.f, 1.f);
        Tensor weight = Tensor::uniform({O, C, k, k}, rng, -1.f, 1.f);
        Tensor bias = Tensor::uniform({O}, rng, -1.f, 1.f);
        Tensor fast = conv2d(input, weight, bias, spec);
        Tensor ref = testing::naive_conv2d(input, weight, bias, spec);
        for (std::size_t i = 0; i < fast.data.size(); ++i)
            worst = std::max(worst, static_cast<double>(std::abs(fast.data[i] - ref.data[i])));
    }
    const double elapsed = seconds_since(t0);
    c.pass = worst < 1e-5 && elapsed < 30.0;
    c.detail = "200 shapes, worst abs diff " + fmt(worst) + " in " + fmt(elapsed) + "s";
    return c;
}

Criterion c3_shape_contract() {
    Criterion c{3, "architecture shape contract", false, ""};
    Rng rng(33);
    bool ok = true;
    std::string note;
    for (int size : {32, 48, 64}) {
        NetworkConfig cfg = eighth_width(5);
        cfg.input_h = size;
        cfg.input_w = size;
        DepthNet net = build_network<float>(cfg);
        Tensor out = forward_frame(net, Tensor::uniform({3, size, size}, rng, -1.f, 1.f));
        if (out.shape != std::vector<int>{3, size, size}) {
            ok = false;
            note += " bad shape at " + std::to_string(size);
        }
        for (float v : out.data)
            if (v < -1.f || v > 1.f) {
                ok = false;
                note += " range violation at " + std::to_string(size);
                break;
            }
    }
    for (int trial = 0; trial < 100; ++trial) {
        const int ch = 1 + static_cast<int>(rng.uniform_int(16));
        const int h = 2 * (1 + static_cast<int>(rng.uniform_int(8)));
        const int w = 2 * (1 + static_cast<int>(rng.uniform_int(8)));
        Tensor x = Tensor::uniform({ch, h, w}, rng, -10.f, 10.f);
        if (depth_to_space(space_to_depth(x, 2), 2) != x) {
            ok = false;
            note += " permutation round-trip failed";
            break;
        }
    }
    c.pass = ok;
    c.detail = ok ? "32/48/64 outputs in range, 100 bit-exact round trips" : note;
    return c;
}

Criterion c4_loss_metrics() {
    Criterion c{4, "loss/metric exactness", false, ""};
    std::ostringstream fail;

    auto expect = [&](bool cond, const char* what) {
        if (!cond) fail << ' ' << what << ';';
    };
    auto near = [](double a, double b, double rel) {
        return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-30});
    };

    // worked examples: per-image L1 and batch mean
    expect(l1_loss(Tensor({2}, {1, 2}), Tensor({2}, {0, 0})) == 3.f, "l1 example");
    expect(batch_loss<float>({Tensor({2}, {1, 2}), Tensor({2}, {1, 0})},
                             {Tensor({2}, {0, 0}), Tensor({2}, {0, 0})}) == 2.f,
           "batch mean example");

    // worked examples: metrics over constant images
    auto const_img = [](std::uint8_t v) {
        Image8 img(4, 4);
        std::fill(img.data.begin(), img.data.end(), v);
        return img;
    };
    MetricsReport offset = evaluate({const_img(10)}, {const_img(13)});
    expect(offset.mse == 9.0 && offset.ae == 3.0, "10 vs 13 example");
    MetricsReport extreme = evaluate({const_img(0)}, {const_img(255)});
    expect(extreme.mse == 65025.0 && extreme.ae == 255.0, "0 vs 255 example");
    expect(near(extreme.rmsle, std::log(256.0), 1e-12), "rmsle ln(256) example");

    // brute-force agreement on random sets, 1e-9 relative
    Rng rng(0xfeedface);
    std::vector<Image8> real, pred;
    std::vector<double> sq, ab, lg;
    for (int i = 0; i < 8; ++i) {
        Image8 r(11, 13), p(11, 13);
        for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
        for (auto& v : p.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
        for (std::size_t k = 0; k < r.data.size(); ++k) {
            const double d = static_cast<double>(r.data[k]) - p.data[k];
            sq.push_back(d * d);
            ab.push_back(std::abs(d));
            const double ld = std::log(256.0 - r.data[k]) - std::log(256.0 - p.data[k]);
            lg.push_back(ld * ld);
        }
        real.push_back(std::move(r));
        pred.push_back(std::move(p));
    }
    auto mean = [](const std::vector<double>& v) {
        double acc = 0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };
    MetricsReport rep = evaluate(real, pred);
    expect(near(rep.mse, mean(sq), 1e-9), "mse brute force");
    expect(near(rep.ae, mean(ab), 1e-9), "ae brute force");
    expect(near(rep.rmsle, std::sqrt(mean(lg)), 1e-9), "rmsle brute force");

    // brute-force L1 on random tensors, accumulated in double
    for (int trial = 0; trial < 20; ++trial) {
        Tensor y = Tensor::uniform({3, 9, 9}, rng, -1.f, 1.f);
        Tensor yh = Tensor::uniform({3, 9, 9}, rng, -1.f, 1.f);
        double ref = 0;
        for (std::size_t i = 0; i < y.data.size(); ++i)
            ref += std::abs(static_cast<double>(y.data[i]) - yh.data[i]);
        if (!near(l1_loss(y, yh), ref, 1e-5)) fail << " l1 brute force;";  // f32 accumulator
    }

    c.pass = fail.str().empty();
    c.detail = c.pass ? "worked examples + brute-force references agree" : fail.str();
    return c;
}

Criterion c5_overfit(const char* art_dir) {
    Criterion c{5, "overfit smoke test", false, ""};
    const auto t0 = clock_type::now();

    GeneratorConfig gen;
    gen.train_episodes = 1;
    gen.test_episodes = 0;
    gen.frames_per_episode = 96;
    gen.seed = 21;
    Dataset ds = to_dataset(generate_dataset(gen));

    TrainConfig tc;
    tc.seq_len = 32;
    tc.burn_len = 32;
    tc.val_interval = 0;
    tc.seed = 21;

    auto run_to_target = [&](std::vector<LossRecord>* hist) {
        Trainer trainer(tc, eighth_width(21), ds);
        double ae = 1e30;
        int updates = 0;
        while (updates < 500 && seconds_since(t0) < 540.0) {
            trainer.run(25);
            updates += 25;
            ae = episode_ae(trainer.net(), {&ds.episodes[0]}, false);
            if (ae < 5.0) break;
        }
        if (hist) *hist = trainer.history();
        return std::make_pair(ae, updates);
    };

    std::vector<LossRecord> history_a;
    auto [ae, updates] = run_to_target(&history_a);
    const double elapsed = seconds_since(t0);

    // same-seed reproducibility over a short prefix (bit-identical losses)
    TrainConfig short_tc = tc;
    Trainer rep_a(short_tc, eighth_width(21), ds);
    Trainer rep_b(short_tc, eighth_width(21), ds);
    rep_a.run(10);
    rep_b.run(10);
    bool identical = true;
    for (int i = 0; i < 10; ++i)
        identical = identical && rep_a.history()[i].train_loss == rep_b.history()[i].train_loss;

    if (art_dir) write_loss_history((fs::path(art_dir) / "overfit_loss.csv").string(), history_a);

    c.pass = ae < 5.0 && updates <= 500 && elapsed < 600.0 && identical;
    c.detail = "AE=" + fmt(ae) + " after " + std::to_string(updates) + " updates in " +
               fmt(elapsed) + "s, same-seed histories " + (identical ? "identical" : "DIFFER");
    return c;
}

struct TrainedSeed {
    std::uint64_t seed;
    DepthNet net;
    double ae_recurrent = 0;
    double ae_ablated = 0;
};

Criterion c6_depth_from_motion(std::vector<TrainedSeed>& out_seeds, const Dataset& ds,
                               int updates_per_seed) {
    Criterion c{6, "depth-from-motion advantage", false, ""};
    const auto t0 = clock_type::now();
    const auto test_eps = ds.split(true);

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        TrainConfig tc;
        tc.seq_len = 32;
        tc.burn_len = 32;
        tc.val_interval = 0;
        tc.seed = seed;
        Trainer trainer(tc, eighth_width(seed), ds);
        trainer.run(updates_per_seed);

        TrainedSeed ts{seed, trainer.net(), 0, 0};
        ts.ae_recurrent = episode_ae(ts.net, test_eps, false);
        ts.ae_ablated = episode_ae(ts.net, test_eps, true);
        out_seeds.push_back(std::move(ts));
    }

    // median seed by recurrent AE carries the verdict
    std::vector<std::size_t> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out_seeds[a].ae_recurrent < out_seeds[b].ae_recurrent;
    });
    const TrainedSeed& med = out_seeds[order[1]];
    const double margin = (med.ae_ablated - med.ae_recurrent) / med.ae_ablated;
    const double elapsed = seconds_since(t0);

    c.pass = med.ae_recurrent < 0.9 * med.ae_ablated && elapsed < 3600.0;
    std::ostringstream os;
    os << "median seed " << med.seed << ": AE " << fmt(med.ae_recurrent) << " vs ablated "
       << fmt(med.ae_ablated) << " (margin " << fmt(100 * margin) << "%), "
       << updates_per_seed << " updates/seed, " << fmt(elapsed) << "s; all seeds";
    for (std::size_t i : order)
        os << " [" << out_seeds[i].seed << ": " << fmt(out_seeds[i].ae_recurrent) << "/"
           << fmt(out_seeds[i].ae_ablated) << "]";
    c.detail = os.str();
    return c;
}

Criterion c7_oracle_soundness() {
    Criterion c{7, "oracle avoidance soundness", false, ""};
    const auto t0 = clock_type::now();
    Course course = build_course();
    OracleDepthSource oracle;
    SimSummary s = run_campaign(course, oracle, 30, 2026);
    const double elapsed = seconds_since(t0);
    c.pass = s.finishes == 30 && s.crashes == 0 && s.timeouts == 0 && elapsed < 300.0;
    c.detail = std::to_string(s.finishes) + "/30 finishes, " + std::to_string(s.crashes) +
               " crashes in " + fmt(elapsed) + "s";
    return c;
}

Criterion c8_learned_avoidance(std::vector<TrainedSeed>& seeds, const char* art_dir) {
    Criterion c{8, "learned avoidance", false, ""};
    if (seeds.size() != 3) {
        c.detail = "no trained models (criterion 6 did not run)";
        return c;
    }
    std::vector<std::size_t> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return seeds[a].ae_recurrent < seeds[b].ae_recurrent;
    });
    const auto t0 = clock_type::now();
    Course course = build_course();
    NetworkDepthSource source(seeds[order[1]].net);
    const std::string traj_dir = art_dir ? (fs::path(art_dir) / "learned_trials").string() : "";
    SimSummary s = run_campaign(course, source, 30, 2027, traj_dir);
    const double elapsed = seconds_since(t0);
    c.pass = s.finishes > s.crashes;
    c.detail = std::to_string(s.finishes) + " finishes / " + std::to_string(s.crashes) +
               " crashes / " + std::to_string(s.timeouts) + " timeouts in " + fmt(elapsed) + "s";
    return c;
}

Criterion c9_persistence() {
    Criterion c{9, "persistence", false, ""};
    GeneratorConfig gen;
    gen.train_episodes = 2;
    gen.test_episodes = 1;
    gen.frames_per_episode = 40;
    gen.seed = 9;
    Dataset ds = to_dataset(generate_dataset(gen));

    TrainConfig tc;
    tc.seq_len = 8;
    tc.burn_len = 8;
    tc.val_interval = 0;
    tc.seed = 9;

    Trainer straight(tc, eighth_width(9), ds);
    straight.run(12);

    const fs::path dir = fs::temp_directory_path() / "grudepth_acceptance";
    fs::create_directories(dir);
    const std::string mid = (dir / "mid.ckpt").string();
    Trainer first(tc, eighth_width(9), ds);
    first.run(6);
    first.save(mid);

    // byte-level round trip: load, save again, compare files
    LoadedCheckpoint lc = load_checkpoint(mid);
    const std::string again = (dir / "again.ckpt").string();
    save_checkpoint(again, lc.net, lc.adam, lc.rng, lc.train_config);
    std::ifstream fa(mid, std::ios::binary), fb(again, std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    const bool bytes_equal = !ba.empty() && ba == bb;

    Trainer resumed(lc, ds);
    resumed.run(6);

    bool params_equal = resumed.net().params.size() == straight.net().params.size();
    for (std::size_t i = 0; params_equal && i < straight.net().params.size(); ++i)
        params_equal = resumed.net().params[i].value == straight.net().params[i].value;
    bool history_equal = true;
    for (int i = 0; i < 6; ++i)
        history_equal = history_equal &&
                        resumed.history()[i].train_loss == straight.history()[6 + i].train_loss &&
                        resumed.history()[i].step == straight.history()[6 + i].step;

    c.pass = bytes_equal && params_equal && history_equal;
    c.detail = std::string("round trip ") + (bytes_equal ? "byte-identical" : "DIFFERS") +
               ", resumed run " + (params_equal && history_equal ? "matches" : "DIVERGES");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    const char* art_dir = argc > 1 ? argv[1] : nullptr;
    if (art_dir) fs::create_directories(art_dir);

    std::vector<Criterion> results;
    auto guard = [&](auto&& fn) {
        try {
            results.push_back(fn());
        } catch (const std::exception& e) {
            Criterion c{0, "exception", false, ""};
            c.detail = e.what();
            results.push_back(c);
        }
    };

    guard([] { return c2_conv_oracle(); });
    guard([] { return c3_shape_contract(); });
    guard([] { return c4_loss_metrics(); });
    guard([] { return c9_persistence(); });
    guard([] { return c1_gradients(); });
    guard([] { return c7_oracle_soundness(); });
    guard([&] { return c5_overfit(art_dir); });

    GeneratorConfig gen;  // desk-scale defaults: 24 train + 6 test x 96 frames
    gen.seed = 6;
    Dataset ds = to_dataset(generate_dataset(gen));
    std::vector<TrainedSeed> seeds;
    guard([&] { return c6_depth_from_motion(seeds, ds, 900); });
    guard([&] { return c8_learned_avoidance(seeds, art_dir); });

    std::sort(results.begin(), results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int failures = 0;
    for (const auto& c : results) {
        if (!c.pass) ++failures;
        std::printf("criterion %d (%s): %s — %s\n", c.id, c.name.c_str(),
                    c.pass ? "PASS" : "FAIL", c.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
