#pragma once

#include "dptails/brent.hpp"
#include "dptails/csv.hpp"
#include "dptails/data.hpp"
#include "dptails/empirical.hpp"
#include "dptails/errors.hpp"
#include "dptails/grouped.hpp"
#include "dptails/metrics.hpp"
#include "dptails/objective.hpp"
#include "dptails/oracle.hpp"
#include "dptails/quadrature.hpp"
#include "dptails/rng.hpp"
#include "dptails/transform.hpp"
