#pragma once

#include "pic/config.hpp"
#include "pic/deposit.hpp"
#include "pic/gpma.hpp"
#include "pic/grid.hpp"
#include "pic/particles.hpp"
#include "pic/report.hpp"
#include "pic/rhocell.hpp"
#include "pic/rng.hpp"
#include "pic/shape.hpp"
#include "pic/simulation.hpp"
#include "pic/sort_policy.hpp"
#include "pic/tile.hpp"
#include "pic/workload.hpp"
