#pragma once

// Umbrella header.

#include "plnet/baseline.hpp"
#include "plnet/config.hpp"
#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/experiment.hpp"
#include "plnet/mlp.hpp"
#include "plnet/numeric.hpp"
#include "plnet/optimizer.hpp"
#include "plnet/serialization.hpp"
#include "plnet/train.hpp"
