#pragma once

#include "satrf/attention.hpp"
#include "satrf/dataset.hpp"
#include "satrf/error.hpp"
#include "satrf/eval.hpp"
#include "satrf/forest.hpp"
#include "satrf/model_io.hpp"
#include "satrf/multihead.hpp"
#include "satrf/optim.hpp"
#include "satrf/random.hpp"
