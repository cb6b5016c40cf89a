#pragma once

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/agents/dqn.hpp"
#include "ambimaze/agents/encoder.hpp"
#include "ambimaze/agents/intrinsic.hpp"
#include "ambimaze/agents/policy.hpp"
#include "ambimaze/agents/ppo.hpp"
#include "ambimaze/flat_env.hpp"
#include "ambimaze/harness/config.hpp"
#include "ambimaze/harness/experiment.hpp"
#include "ambimaze/harness/metrics.hpp"
#include "ambimaze/map_format.hpp"
#include "ambimaze/maze.hpp"
#include "ambimaze/nn.hpp"
#include "ambimaze/percept.hpp"
#include "ambimaze/rng.hpp"
