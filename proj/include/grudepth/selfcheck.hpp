#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "grudepth/gradcheck.hpp"

namespace grudepth {

struct SelfCheckResult {
    std::vector<std::pair<std::string, CheckReport>> primitives;
    CheckReport end_to_end;
    bool pass = false;
};

// Finite-difference verification of every autodiff primitive (tol 1e-4)
// and of the 1/8-width network over a 3-frame sequence (tol 1e-3), all in
// double precision with epsilon 1e-3.
SelfCheckResult run_gradcheck_suite(std::uint64_t seed = 0);

void print_gradcheck_report(const SelfCheckResult& result, std::ostream& out);

}  // namespace grudepth
