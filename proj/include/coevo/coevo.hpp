#pragma once

#include "coevo/agents.hpp"
#include "coevo/analysis.hpp"
#include "coevo/error.hpp"
#include "coevo/experiments.hpp"
#include "coevo/flow.hpp"
#include "coevo/game.hpp"
#include "coevo/integrator.hpp"
#include "coevo/io.hpp"
#include "coevo/parallel.hpp"
#include "coevo/rng.hpp"
#include "coevo/state.hpp"
