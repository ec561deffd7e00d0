#pragma once

/* Umbrella header: the whole library. */

#include <wrenchlab/common.hpp>
#include <wrenchlab/rng.hpp>
#include <wrenchlab/linprog.hpp>
#include <wrenchlab/wrench.hpp>
#include <wrenchlab/polygon.hpp>
#include <wrenchlab/hull.hpp>
#include <wrenchlab/metrics.hpp>
#include <wrenchlab/pong.hpp>
#include <wrenchlab/surfaces.hpp>
#include <wrenchlab/synth.hpp>
#include <wrenchlab/oracle.hpp>
#include <wrenchlab/io.hpp>
