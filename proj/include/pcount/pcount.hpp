#pragma once

#include "pcount/config.hpp"
#include "pcount/count_law.hpp"
#include "pcount/diagnostics.hpp"
#include "pcount/errors.hpp"
#include "pcount/estimate.hpp"
#include "pcount/fourier.hpp"
#include "pcount/ghk.hpp"
#include "pcount/hermite.hpp"
#include "pcount/io.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"
#include "pcount/optimize.hpp"
#include "pcount/random.hpp"
#include "pcount/simulate.hpp"
