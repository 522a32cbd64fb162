#include "lrtd/grad_check.hpp"

#include <cmath>

#include "lrtd/errors.hpp"

namespace lrtd {

double grad_check(const std::function<Var(Tape&)>& build, const std::vector<Param*>& params,
                  double h) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }

  auto eval = [&]() {
    Tape tape;
    Var loss = build(tape);
    const double v = tape.scalar_value(loss);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss value");
    return v;
  };

  double worst = 0.0;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double fp = eval();
      p->value[i] = saved - h;
      const double fm = eval();
      p->value[i] = saved;

      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace lrtd
