#pragma once

#include "approx.hpp"
#include "cellsolve.hpp"
#include "core.hpp"
#include "counterex.hpp"
#include "energy.hpp"
#include "env.hpp"
#include "fields.hpp"
#include "homog.hpp"
#include "io.hpp"
#include "maxflow.hpp"
#include "parallel.hpp"
#include "rng.hpp"
