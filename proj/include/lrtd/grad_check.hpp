#pragma once

#include <functional>
#include <vector>

#include "lrtd/tape.hpp"

namespace lrtd {

// Compares the tape gradient of a scalar-valued function against central
// finite differences. `build` constructs the loss graph on the given tape
// from the current values of `params`. Returns the max over all coordinates
// of |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(const std::function<Var(Tape&)>& build, const std::vector<Param*>& params,
                  double h = 1e-5);

}  // namespace lrtd
