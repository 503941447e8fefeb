#pragma once

#include "ecolab/core.hpp"
#include "ecolab/linalg.hpp"
#include "ecolab/random.hpp"
#include "ecolab/parallel.hpp"
#include "ecolab/continuous.hpp"
#include "ecolab/discrete.hpp"
#include "ecolab/epidemic.hpp"
#include "ecolab/selection.hpp"
#include "ecolab/analysis.hpp"
#include "ecolab/io.hpp"
