#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "grudepth/autodiff.hpp"
#include "grudepth/rng.hpp"

namespace grudepth {

// Finite-difference gradient verification, always in double precision.
// The builder must be deterministic: given the same inputs it rebuilds
// the same scalar loss.

using LossBuilder =
    std::function<int(Tape<double>&, const std::vector<int>& input_ids)>;

struct CheckEntry {
    std::size_t input_index = 0;
    std::size_t elem_index = 0;
    double g_ad = 0;
    double g_fd = 0;
    double rel_err = 0;
    bool nonfinite = false;
    bool excluded = false;  // flagged kink, not counted against the pass flag
};

struct CheckReport {
    bool pass = false;
    double max_rel_err = 0;
    std::size_t checked = 0;
    std::size_t excluded = 0;
    std::vector<CheckEntry> worst;  // failing / flagged entries

    std::string summary() const {
        return std::string(pass ? "pass" : "FAIL") + " max_rel_err=" +
               std::to_string(max_rel_err) + " checked=" + std::to_string(checked) +
               " excluded=" + std::to_string(excluded);
    }
};

// Marks elements whose derivative is undefined (e.g. lrelu exactly at a
// kink); flagged elements are reported but excluded from the pass flag.
using KinkFilter = std::function<bool(std::size_t input_index, std::size_t elem_index)>;

inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

inline CheckReport grad_check(const LossBuilder& builder, std::vector<Tensor64> inputs,
                              double epsilon, double tol, std::size_t max_per_input = 256,
                              const KinkFilter& kink = nullptr) {
    auto eval = [&](const std::vector<Tensor64>& ins) {
        Tape<double> t;
        std::vector<int> leaf_ids;
        leaf_ids.reserve(ins.size());
        for (const auto& in : ins) leaf_ids.push_back(t.leaf(in));
        return t.value(builder(t, leaf_ids)).data[0];
    };

    // One AD pass over the unperturbed inputs.
    Tape<double> tape;
    std::vector<int> ids;
    for (const auto& t : inputs) ids.push_back(tape.leaf(t));
    const int loss = builder(tape, ids);
    tape.backward(loss);

    CheckReport report;
    report.pass = true;
    Rng rng(0x9d5c0f1bu);  // deterministic element subsampling

    for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
        const Tensor64& grad_ad = tape.grad(ids[ii]);
        const std::size_t n = inputs[ii].numel();
        std::vector<std::size_t> elems;
        if (n <= max_per_input) {
            for (std::size_t e = 0; e < n; ++e) elems.push_back(e);
        } else {
            for (std::size_t k = 0; k < max_per_input; ++k)
                elems.push_back(static_cast<std::size_t>(rng.uniform_int(n)));
        }
        for (std::size_t e : elems) {
            const double keep = inputs[ii].data[e];
            inputs[ii].data[e] = keep + epsilon;
            const double fp = eval(inputs);
            inputs[ii].data[e] = keep - epsilon;
            const double fm = eval(inputs);
            inputs[ii].data[e] = keep;

            CheckEntry entry;
            entry.input_index = ii;
            entry.elem_index = e;
            entry.g_ad = grad_ad.data[e];
            entry.g_fd = (fp - fm) / (2 * epsilon);
            entry.nonfinite = !std::isfinite(entry.g_ad) || !std::isfinite(entry.g_fd);
            entry.rel_err = entry.nonfinite ? INFINITY : rel_error(entry.g_ad, entry.g_fd);
            entry.excluded = kink && kink(ii, e);

            if (entry.excluded) {
                ++report.excluded;
                report.worst.push_back(entry);
                continue;
            }
            ++report.checked;
            if (entry.nonfinite || entry.rel_err >= tol) {
                report.pass = false;
                report.worst.push_back(entry);
            }
            if (entry.rel_err > report.max_rel_err || entry.nonfinite)
                report.max_rel_err = entry.rel_err;
        }
    }
    return report;
}

}  // namespace grudepth
