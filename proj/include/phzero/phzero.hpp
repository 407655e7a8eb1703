#pragma once

#include "phzero/analysis.hpp"
#include "phzero/canonicalize.hpp"
#include "phzero/ensemble.hpp"
#include "phzero/errors.hpp"
#include "phzero/io.hpp"
#include "phzero/linalg.hpp"
#include "phzero/model.hpp"
#include "phzero/sim.hpp"
#include "phzero/zerodyn.hpp"
