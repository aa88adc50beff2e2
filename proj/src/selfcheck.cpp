#include "grudepth/selfcheck.hpp"

#include <iomanip>

#include "grudepth/network.hpp"

namespace grudepth {

namespace {

constexpr double kEps = 1e-3;
constexpr double kPrimitiveTol = 1e-4;
constexpr double kEndToEndTol = 1e-3;

Tensor64 random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    return Tensor64::uniform(std::move(shape), rng, lo, hi);
}

// Push values away from 0 so lrelu / L1 kinks cannot fall inside the
// finite-difference step.
Tensor64 away_from_zero(Tensor64 t, double margin = 0.05) {
    for (auto& v : t.data)
        if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
    return t;
}

// Scalar readout with non-uniform upstream gradients.
int weighted_sum(Tape<double>& tape, int node, Rng& rng) {
    Tensor64 w = random_tensor(tape.value(node).shape, rng, 0.2, 1.0);
    return tape.sum(tape.mul(node, tape.leaf(std::move(w))));
}

}  // namespace

SelfCheckResult run_gradcheck_suite(std::uint64_t seed) {
    SelfCheckResult result;
    Rng rng(seed ^ 0x5eed5eedull);

    auto check = [&](const std::string& name, const LossBuilder& builder,
                     std::vector<Tensor64> inputs, double tol = kPrimitiveTol) {
        result.primitives.emplace_back(name,
                                       grad_check(builder, std::move(inputs), kEps, tol, 128));
    };

    {
        Rng wrng = rng.fork(1);
        check("conv2d",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(
                      t, t.conv2d(in[0], in[1], in[2], ConvSpec{3, 3, 1, 1, 2, 3}), local);
              },
              {random_tensor({2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng),
               random_tensor({3}, rng)});
    }
    {
        Rng wrng = rng.fork(2);
        check("conv2d_strided",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(
                      t, t.conv2d(in[0], in[1], in[2], ConvSpec{3, 3, 2, 1, 2, 4}), local);
              },
              {random_tensor({2, 8, 8}, rng), random_tensor({4, 2, 3, 3}, rng),
               random_tensor({4}, rng)});
    }
    {
        Rng wrng = rng.fork(3);
        check("depth_to_space",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.depth_to_space(in[0], 2), local);
              },
              {random_tensor({8, 3, 3}, rng)});
    }
    {
        Rng wrng = rng.fork(4);
        check("space_to_depth",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.space_to_depth(in[0], 2), local);
              },
              {random_tensor({2, 4, 4}, rng)});
    }
    {
        Rng wrng = rng.fork(5);
        check("lrelu_standard",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.lrelu(in[0], 0.1, LReluVariant::Standard), local);
              },
              {away_from_zero(random_tensor({4, 5}, rng))});
    }
    {
        Rng wrng = rng.fork(6);
        check("lrelu_paper_verbatim",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.lrelu(in[0], 0.1, LReluVariant::PaperVerbatim), local);
              },
              {away_from_zero(random_tensor({4, 5}, rng))});
    }
    {
        Rng wrng = rng.fork(7);
        check("sigmoid",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.sigmoid(in[0]), local);
              },
              {random_tensor({3, 7}, rng, -2, 2)});
    }
    {
        Rng wrng = rng.fork(8);
        check("tanh",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.tanh(in[0]), local);
              },
              {random_tensor({3, 7}, rng, -2, 2)});
    }
    {
        Rng wrng = rng.fork(9);
        check("add",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.add(in[0], in[1]), local);
              },
              {random_tensor({6}, rng), random_tensor({6}, rng)});
    }
    {
        Rng wrng = rng.fork(10);
        check("sub",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.sub(in[0], in[1]), local);
              },
              {random_tensor({6}, rng), random_tensor({6}, rng)});
    }
    {
        Rng wrng = rng.fork(11);
        check("mul",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.mul(in[0], in[1]), local);
              },
              {random_tensor({6}, rng), random_tensor({6}, rng)});
    }
    {
        Rng wrng = rng.fork(12);
        check("scale",
              [wrng](Tape<double>& t, const std::vector<int>& in) {
                  Rng local = wrng;
                  return weighted_sum(t, t.affine(in[0], 0.37, -0.2), local);
              },
              {random_tensor({6}, rng)});
    }
    {
        // distinct inputs keep |y - yhat| away from its kink
        Tensor64 y = random_tensor({3, 4}, rng, 0.5, 1.5);
        Tensor64 yhat = random_tensor({3, 4}, rng, -1.5, -0.5);
        check("l1",
              [](Tape<double>& t, const std::vector<int>& in) {
                  return t.l1(in[0], in[1]);
              },
              {std::move(y), std::move(yhat)});
    }
    {
        check("sum",
              [](Tape<double>& t, const std::vector<int>& in) { return t.sum(in[0]); },
              {random_tensor({5, 3}, rng)});
    }

    // End-to-end: 1/8-width network, 3-frame window, loss = mean L1.
    {
        NetworkConfig cfg;
        cfg.width_num = 1;
        cfg.width_den = 8;
        cfg.input_h = 16;
        cfg.input_w = 16;
        cfg.seed = seed + 17;
        DepthNetT<double> net = build_network<double>(cfg);

        std::vector<Tensor64> frames, targets;
        Rng drng = rng.fork(99);
        for (int f = 0; f < 3; ++f) {
            frames.push_back(random_tensor({3, 16, 16}, drng));
            targets.push_back(random_tensor({3, 16, 16}, drng));
        }

        std::vector<Tensor64> inputs;
        for (const auto& p : net.params) inputs.push_back(p.value);

        auto builder = [&net, frames, targets](Tape<double>& tape,
                                               const std::vector<int>& param_ids) {
            net.reset_state();
            TapedRun<double> run(tape, net, param_ids);
            int acc = -1;
            for (std::size_t f = 0; f < frames.size(); ++f) {
                const int out = run.step(frames[f]);
                const int loss = tape.l1(tape.leaf(targets[f]), out);
                acc = acc < 0 ? loss : tape.add(acc, loss);
            }
            return tape.affine(acc, 1.0 / static_cast<double>(frames.size()), 0.0);
        };

        // The loss surface has lrelu / |.| kinks; a perturbation of +-eps can
        // push an activation across one, which corrupts the FD reference but
        // says nothing about the recorded gradient. Flag such elements by
        // checking whether the FD estimate is stable under halving eps.
        std::vector<Tensor64> probe = inputs;
        auto eval_at = [&](std::size_t ii, std::size_t e, double delta) {
            const double keep = probe[ii].data[e];
            probe[ii].data[e] = keep + delta;
            Tape<double> t;
            std::vector<int> ids;
            ids.reserve(probe.size());
            for (const auto& in : probe) ids.push_back(t.leaf(in));
            const double v = t.value(builder(t, ids)).data[0];
            probe[ii].data[e] = keep;
            return v;
        };
        KinkFilter kink = [&](std::size_t ii, std::size_t e) {
            const double fp = eval_at(ii, e, kEps);
            const double fm = eval_at(ii, e, -kEps);
            const double f0 = eval_at(ii, e, 0.0);
            const double d1 = (fp - fm) / (2 * kEps);
            const double h = kEps / 2;
            const double d2 = (eval_at(ii, e, h) - eval_at(ii, e, -h)) / (2 * h);
            if (rel_error(d1, d2) > 1e-4) return true;  // unstable under halving
            // one-sided slopes disagree -> kink centered on the stencil
            return rel_error((fp - f0) / kEps, (f0 - fm) / kEps) > 1e-3;
        };
        result.end_to_end = grad_check(builder, std::move(inputs), kEps, kEndToEndTol, 4, kink);
    }

    result.pass = result.end_to_end.pass;
    for (const auto& [name, rep] : result.primitives) result.pass = result.pass && rep.pass;
    return result;
}

void print_gradcheck_report(const SelfCheckResult& result, std::ostream& out) {
    out << std::left;
    for (const auto& [name, rep] : result.primitives)
        out << "  " << std::setw(22) << name << rep.summary() << "\n";
    out << "  " << std::setw(22) << "end_to_end" << result.end_to_end.summary() << "\n";
    out << (result.pass ? "gradcheck: all checks passed" : "gradcheck: FAILURES detected")
        << "\n";
}

}  // namespace grudepth
