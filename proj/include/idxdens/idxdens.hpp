#pragma once

/// Umbrella header for the idxdens library.

#include "idxdens/artin.hpp"
#include "idxdens/config.hpp"
#include "idxdens/density.hpp"
#include "idxdens/empirical.hpp"
#include "idxdens/error.hpp"
#include "idxdens/factor.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/kummer.hpp"
#include "idxdens/numtheory.hpp"
#include "idxdens/pipeline.hpp"
#include "idxdens/rational_groups.hpp"
#include "idxdens/report.hpp"
