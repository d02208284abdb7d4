#pragma once

#include "qvam/analysis.hpp"
#include "qvam/core.hpp"
#include "qvam/experiment.hpp"
#include "qvam/io.hpp"
#include "qvam/memory.hpp"
#include "qvam/rng.hpp"
