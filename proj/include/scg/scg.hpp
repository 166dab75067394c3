#pragma once

#include "scg/basis.hpp"
#include "scg/diagnostics.hpp"
#include "scg/dpd_sim.hpp"
#include "scg/error.hpp"
#include "scg/experiment.hpp"
#include "scg/function_core.hpp"
#include "scg/random.hpp"
#include "scg/solver_mul.hpp"
#include "scg/solver_uni.hpp"
#include "scg/stochastic_source.hpp"
