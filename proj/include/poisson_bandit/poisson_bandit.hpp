#pragma once

#include "audit.hpp"
#include "config.hpp"
#include "dp_solver.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "game.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "linearized.hpp"
#include "model.hpp"
#include "poisson.hpp"
#include "run.hpp"
