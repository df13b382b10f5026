#pragma once

#include "heatscope/diophantine.hpp"
#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/heat.hpp"
#include "heatscope/numeric.hpp"
#include "heatscope/obs_gramian.hpp"
#include "heatscope/pointsets.hpp"
#include "heatscope/remez.hpp"
#include "heatscope/rng.hpp"
#include "heatscope/spectral.hpp"
