#pragma once

// Umbrella header for the library (everything except the CLI layer).

#include "sketchls/bench.hpp"
#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/lsqr.hpp"
#include "sketchls/matrix_market.hpp"
#include "sketchls/probgen.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"
#include "sketchls/solvers.hpp"
