#pragma once

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/image_solver.hpp"
#include "jointrec/io.hpp"
#include "jointrec/joint_solver.hpp"
#include "jointrec/kaczmarz.hpp"
#include "jointrec/metrics.hpp"
#include "jointrec/rates.hpp"
#include "jointrec/rng.hpp"
#include "jointrec/sweep.hpp"
#include "jointrec/system_solver.hpp"
#include "jointrec/testbed.hpp"
