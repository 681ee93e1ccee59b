#pragma once

#include "basis.hpp"
#include "estimate.hpp"
#include "experiments.hpp"
#include "gent.hpp"
#include "io.hpp"
#include "ks.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "select.hpp"
#include "special.hpp"
#include "subset.hpp"
