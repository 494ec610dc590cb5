#pragma once

#include "clcp/calibrate.hpp"
#include "clcp/core.hpp"
#include "clcp/error.hpp"
#include "clcp/io.hpp"
#include "clcp/losses.hpp"
#include "clcp/models.hpp"
#include "clcp/predictors.hpp"
#include "clcp/random.hpp"
#include "clcp/simulate.hpp"
