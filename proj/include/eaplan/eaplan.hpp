#pragma once

#include "eaplan/battery.hpp"
#include "eaplan/compute_energy.hpp"
#include "eaplan/coverage_planner.hpp"
#include "eaplan/csv.hpp"
#include "eaplan/energy_model.hpp"
#include "eaplan/error.hpp"
#include "eaplan/estimator.hpp"
#include "eaplan/geometry.hpp"
#include "eaplan/replanner.hpp"
#include "eaplan/scenario.hpp"
#include "eaplan/simulator.hpp"
#include "eaplan/tracker.hpp"
