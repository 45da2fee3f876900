#pragma once

#include "slearn/errors.hpp"
#include "slearn/diagnostics.hpp"
#include "slearn/parallel.hpp"
#include "slearn/graph.hpp"
#include "slearn/graph_io.hpp"
#include "slearn/rng.hpp"
#include "slearn/dataset.hpp"
#include "slearn/datagen.hpp"
#include "slearn/scoring.hpp"
#include "slearn/config.hpp"
#include "slearn/pc_stable.hpp"
#include "slearn/ges.hpp"
#include "slearn/learners.hpp"
#include "slearn/metrics.hpp"
#include "slearn/ensemble.hpp"
#include "slearn/pef.hpp"
#include "slearn/bench.hpp"
