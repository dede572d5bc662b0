#pragma once

#include "scanpower/analysis.hpp"
#include "scanpower/atpg.hpp"
#include "scanpower/bench.hpp"
#include "scanpower/cell_kind.hpp"
#include "scanpower/errors.hpp"
#include "scanpower/fault.hpp"
#include "scanpower/fault_model.hpp"
#include "scanpower/fault_sim.hpp"
#include "scanpower/isomorphism.hpp"
#include "scanpower/logic.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/podem.hpp"
#include "scanpower/power.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/scanpat.hpp"
#include "scanpower/sim.hpp"
#include "scanpower/transform.hpp"
#include "scanpower/verilog.hpp"
