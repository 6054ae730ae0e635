#pragma once

#include "liesym/basis.hpp"
#include "liesym/completion.hpp"
#include "liesym/error.hpp"
#include "liesym/io.hpp"
#include "liesym/jetspace.hpp"
#include "liesym/linalg.hpp"
#include "liesym/rng.hpp"
#include "liesym/sparseopt.hpp"
#include "liesym/symmetry.hpp"
#include "liesym/synth.hpp"
