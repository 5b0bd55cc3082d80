#pragma once

// Everything except io/config/runner, which pull in yaml-cpp, OpenSSL and nlohmann json.
#include "agentsim.hpp"
#include "averaging.hpp"
#include "core.hpp"
#include "finite.hpp"
#include "hydro.hpp"
#include "kernel.hpp"
#include "kinetic.hpp"
#include "measure.hpp"
#include "model.hpp"
#include "probes.hpp"
#include "spectral.hpp"
#include "transport.hpp"
