#pragma once

#include "stratbox/allocore.hpp"
#include "stratbox/bench.hpp"
#include "stratbox/errors.hpp"
#include "stratbox/fpia.hpp"
#include "stratbox/popgen.hpp"
#include "stratbox/population.hpp"
#include "stratbox/recursive.hpp"
#include "stratbox/roundalloc.hpp"
#include "stratbox/stratum_set.hpp"
#include "stratbox/verify.hpp"
