#pragma once

// Umbrella header: the full library.

#include "ppcaq/errors.hpp"
#include "ppcaq/io.hpp"
#include "ppcaq/lab.hpp"
#include "ppcaq/mle.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/nelder_mead.hpp"
#include "ppcaq/numerics.hpp"
#include "ppcaq/oracle.hpp"
#include "ppcaq/quotient.hpp"
#include "ppcaq/rng.hpp"
#include "ppcaq/version.hpp"
