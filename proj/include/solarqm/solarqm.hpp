#pragma once

// Clearsky-bounded quantile mapping for gridded daily GHI, with residual-bias
// diagnostics. Umbrella header.

#include "solarqm/calendar.hpp"
#include "solarqm/clearsky.hpp"
#include "solarqm/dataset.hpp"
#include "solarqm/datastore.hpp"
#include "solarqm/diagnostics.hpp"
#include "solarqm/error.hpp"
#include "solarqm/grid.hpp"
#include "solarqm/pipeline.hpp"
#include "solarqm/quantile.hpp"
#include "solarqm/region.hpp"
#include "solarqm/transfer.hpp"
