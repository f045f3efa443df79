#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ald {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Quick internal consistency checks: generator known-answer block, ELP
/// coefficients against adaptive quadrature, the Gaussian tail variance and
/// the ELP variance recursion against an RK4 solve, exact-sampler moments and
/// the annealed score against finite differences of the log-density.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 0);

}  // namespace ald
