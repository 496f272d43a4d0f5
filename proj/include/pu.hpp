#pragma once

#include "pu/types.hpp"
#include "pu/rng.hpp"
#include "pu/sparse_proj.hpp"
#include "pu/model.hpp"
#include "pu/metrics.hpp"
#include "pu/objectives.hpp"
#include "pu/solver.hpp"
#include "pu/datagen.hpp"
#include "pu/io.hpp"
#include "pu/experiments.hpp"
#include "pu/cli.hpp"
