#pragma once

// Camera-to-BEV view transformation as a precomputed index graph plus
// operator-native gather/modulate/reshape aggregation, with a monolithic
// reference path, an operator-graph exporter/validator, synthetic scene
// generation, and a benchmark harness.

#include "bevlift/aggregation.hpp"
#include "bevlift/bench.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/index_graph.hpp"
#include "bevlift/io.hpp"
#include "bevlift/monolithic.hpp"
#include "bevlift/op_graph.hpp"
#include "bevlift/stacks.hpp"
#include "bevlift/synth.hpp"
#include "bevlift/verify.hpp"
