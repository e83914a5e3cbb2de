#pragma once

#include "urn/core.hpp"
#include "urn/errors.hpp"
#include "urn/experiment.hpp"
#include "urn/oracle.hpp"
#include "urn/rng.hpp"
#include "urn/simulate.hpp"
#include "urn/stats.hpp"
