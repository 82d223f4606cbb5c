#pragma once

// Everything except the command-line layer in nde/cli.
#include "nde/core/action_space.hpp"
#include "nde/core/behavior_model.hpp"
#include "nde/core/context.hpp"
#include "nde/core/histogram.hpp"
#include "nde/core/situation.hpp"
#include "nde/core/state_grid.hpp"
#include "nde/empirical/builder.hpp"
#include "nde/empirical/counts.hpp"
#include "nde/empirical/serialize.hpp"
#include "nde/empirical/smooth.hpp"
#include "nde/empirical/targets.hpp"
#include "nde/lp/lp_format.hpp"
#include "nde/lp/simplex.hpp"
#include "nde/markov/assemble.hpp"
#include "nde/markov/diagnose.hpp"
#include "nde/markov/stationary.hpp"
#include "nde/markov/transition.hpp"
#include "nde/metrics/accident.hpp"
#include "nde/metrics/hellinger.hpp"
#include "nde/metrics/traffic.hpp"
#include "nde/ndd/categorize.hpp"
#include "nde/ndd/csv.hpp"
#include "nde/ndd/lane_change.hpp"
#include "nde/ndd/segment.hpp"
#include "nde/ndd/synthetic.hpp"
#include "nde/ndd/trajectory.hpp"
#include "nde/nde.hpp"
#include "nde/refine/refine.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/episode.hpp"
#include "nde/sim/idm.hpp"
#include "nde/sim/init.hpp"
#include "nde/sim/mobil.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/rollout.hpp"
#include "nde/sim/runner.hpp"
#include "nde/sim/world.hpp"
