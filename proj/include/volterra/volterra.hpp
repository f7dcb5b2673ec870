#pragma once

#include "volterra/assembly.hpp"
#include "volterra/basis.hpp"
#include "volterra/errors.hpp"
#include "volterra/experiment.hpp"
#include "volterra/io.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/signals.hpp"
#include "volterra/solver.hpp"
