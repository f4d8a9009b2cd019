#pragma once

#include "ddsplit/error.hpp"
#include "ddsplit/grid.hpp"
#include "ddsplit/diffusion_operator.hpp"
#include "ddsplit/operator_expression.hpp"
#include "ddsplit/solver.hpp"
#include "ddsplit/decomposition.hpp"
#include "ddsplit/parabolic.hpp"
#include "ddsplit/hyperbolic.hpp"
#include "ddsplit/energy.hpp"
#include "ddsplit/stability.hpp"
#include "ddsplit/harness.hpp"
