#pragma once

#include "cmtsim/engine.hpp"
#include "cmtsim/netsim.hpp"
#include "cmtsim/congestion.hpp"
#include "cmtsim/transport.hpp"
#include "cmtsim/harness.hpp"
#include "cmtsim/config.hpp"
#include "cmtsim/cli.hpp"
