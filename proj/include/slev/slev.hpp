#pragma once

// Everything except the command-line layer (slev/cli.hpp).
#include "slev/config.hpp"
#include "slev/errors.hpp"
#include "slev/estimators.hpp"
#include "slev/fourier_core.hpp"
#include "slev/market_data.hpp"
#include "slev/mc_harness.hpp"
#include "slev/parallel.hpp"
#include "slev/sde_lab.hpp"
#include "slev/stats.hpp"
#include "slev/tick_series.hpp"
#include "slev/tuning.hpp"
