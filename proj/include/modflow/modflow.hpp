#pragma once

#include "modflow/binning.hpp"
#include "modflow/config.hpp"
#include "modflow/errors.hpp"
#include "modflow/experiment.hpp"
#include "modflow/grid.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/hyperbolic.hpp"
#include "modflow/initial.hpp"
#include "modflow/io.hpp"
#include "modflow/measures.hpp"
#include "modflow/target_function.hpp"
