#pragma once

#include <cstdint>
#include <random>

namespace vodsim {

// One generator per run; every stochastic choice draws from it in event order.
using Rng = std::mt19937_64;

}  // namespace vodsim
