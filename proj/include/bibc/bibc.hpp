#pragma once

#include "bibc/errors.hpp"
#include "bibc/numerics.hpp"
#include "bibc/scenario.hpp"
#include "bibc/link.hpp"
#include "bibc/env.hpp"
#include "bibc/neural.hpp"
#include "bibc/agents/hyper.hpp"
#include "bibc/agents/replay.hpp"
#include "bibc/agents/ddpg.hpp"
#include "bibc/agents/sac.hpp"
#include "bibc/agents/dqn.hpp"
#include "bibc/ao.hpp"
#include "bibc/harness/config.hpp"
#include "bibc/harness/runner.hpp"
#include "bibc/harness/summary.hpp"
#include "bibc/selftest.hpp"
