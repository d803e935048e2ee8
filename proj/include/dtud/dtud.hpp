#pragma once

#include "dtud/csv.hpp"
#include "dtud/dataset.hpp"
#include "dtud/doe.hpp"
#include "dtud/error.hpp"
#include "dtud/labeling.hpp"
#include "dtud/marginal.hpp"
#include "dtud/morph.hpp"
#include "dtud/pipeline.hpp"
#include "dtud/response.hpp"
#include "dtud/rng.hpp"
#include "dtud/rules.hpp"
#include "dtud/surrogate.hpp"
#include "dtud/tree.hpp"
#include "dtud/tree_io.hpp"
