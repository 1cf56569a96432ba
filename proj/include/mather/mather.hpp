#pragma once

#include "beta.hpp"
#include "expr.hpp"
#include "gradcheck.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "homology.hpp"
#include "io.hpp"
#include "lbfgs.hpp"
#include "loop.hpp"
#include "mane.hpp"
#include "metric.hpp"
#include "minimizer.hpp"
#include "parallel.hpp"
#include "rigidity.hpp"
#include "rng.hpp"

namespace mather {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mather
