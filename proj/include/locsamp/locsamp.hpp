#pragma once

#include "locsamp/core.hpp"
#include "locsamp/quadrature.hpp"
#include "locsamp/potential.hpp"
#include "locsamp/processes.hpp"
#include "locsamp/rgo.hpp"
#include "locsamp/dynamics.hpp"
#include "locsamp/diagnostics.hpp"
#include "locsamp/poincare.hpp"
#include "locsamp/config.hpp"
#include "locsamp/verify.hpp"
