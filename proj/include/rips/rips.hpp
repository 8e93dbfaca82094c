#ifndef RIPS_RIPS_HPP
#define RIPS_RIPS_HPP

// Numerical core. The CLI layer (config.hpp, io.hpp, cli.hpp) is separate
// because it needs CLI11, nlohmann/json and OpenSSL.

#include "rips/ambiguity.hpp"
#include "rips/bounds.hpp"
#include "rips/core_model.hpp"
#include "rips/estimator.hpp"
#include "rips/mie.hpp"
#include "rips/montecarlo.hpp"
#include "rips/spectral.hpp"

#endif  // RIPS_RIPS_HPP
