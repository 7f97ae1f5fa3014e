#pragma once

#include "tracehide/common.hpp"
#include "tracehide/config.hpp"
#include "tracehide/corpus.hpp"
#include "tracehide/hexgrid.hpp"
#include "tracehide/importance.hpp"
#include "tracehide/metrics.hpp"
#include "tracehide/model.hpp"
#include "tracehide/rng.hpp"
#include "tracehide/unlearn.hpp"
