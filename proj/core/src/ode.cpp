#include "lyap/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lyap/error.hpp"

namespace lyap {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output coefficients.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

Vector DenseSegment::operator()(double t) const {
  const double theta = (t - t0_) / h_;
  const double theta1 = 1.0 - theta;
  return r_[0] + theta * (r_[1] + theta1 * (r_[2] + theta * (r_[3] + theta1 * r_[4])));
}

void DormandPrince::attempt(double t, const Vector& y, const Vector& k1, double h,
                            const StepControl* control, Attempt& out) const {
  auto& k = out.k;
  k[0] = k1;
  Vector tmp = y + h * a21 * k[0];
  rhs_(t + c2 * h, tmp, k[1]);
  tmp = y + h * (a31 * k[0] + a32 * k[1]);
  rhs_(t + c3 * h, tmp, k[2]);
  tmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
  rhs_(t + c4 * h, tmp, k[3]);
  tmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
  rhs_(t + c5 * h, tmp, k[4]);
  tmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
  rhs_(t + h, tmp, k[5]);
  out.y1 = y + h * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] + a76 * k[5]);
  rhs_(t + h, out.y1, k[6]);
  out.k7 = k[6];
  if (!control) return;
  const Vector err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double scale = control->abs_tol + control->rel_tol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
    const double r = err[i] / scale;
    sum += r * r;
  }
  out.error = std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(1, y.size())));
  if (!std::isfinite(out.error)) out.error = std::numeric_limits<double>::infinity();
}

double DormandPrince::initial_step(double t0, const Vector& y0, const Vector& f0, double direction,
                                   const StepControl& control) const {
  // Hairer, Norsett & Wanner's starting step heuristic.
  const Vector scale = (control.abs_tol + control.rel_tol * y0.array().abs()).matrix();
  const double dnf = std::sqrt((f0.array() / scale.array()).square().mean());
  const double dny = std::sqrt((y0.array() / scale.array()).square().mean());
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
  h = std::min(h, control.max_step);
  Vector f1(y0.size());
  rhs_(t0 + direction * h, y0 + direction * h * f0, f1);
  const double der2 = std::sqrt(((f1 - f0).array() / scale.array()).square().mean()) / h;
  const double der = std::max(der2, dnf);
  const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 1.0 / 5.0);
  return std::min({100 * h, h1, control.max_step});
}

OdeStats DormandPrince::integrate(double t0, const Vector& y0, double t1, const StepControl& control,
                                  const std::function<void(const DenseSegment&)>& on_step) const {
  OdeStats stats;
  if (t1 == t0) return stats;
  const double direction = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  Vector y = y0;
  Vector k1(y0.size());
  rhs_(t0, y, k1);
  ++stats.evaluations;
  double h = std::min(initial_step(t0, y0, k1, direction, control), span);
  ++stats.evaluations;
  double t = t0;
  bool last_rejected = false;
  Attempt att;

  while (direction * (t1 - t) > 0.0) {
    if (stats.accepted + stats.rejected >= control.max_steps)
      throw StepSizeUnderflow("step budget exhausted before reaching the end time");
    const double remaining = std::abs(t1 - t);
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h < control.min_step && !final_step) {
      std::ostringstream os;
      os << "step " << h << " below " << control.min_step << " at t = " << t;
      throw StepSizeUnderflow(os.str());
    }
    const double signed_h = direction * h;
    attempt(t, y, k1, signed_h, &control, att);
    stats.evaluations += 6;

    if (att.error <= 1.0) {
      DenseSegment seg;
      seg.t0_ = t;
      seg.h_ = signed_h;
      const Vector ydiff = att.y1 - y;
      const Vector bspl = signed_h * att.k[0] - ydiff;
      seg.r_[0] = y;
      seg.r_[1] = ydiff;
      seg.r_[2] = bspl;
      seg.r_[3] = ydiff - signed_h * att.k[6] - bspl;
      seg.r_[4] = signed_h * (d1 * att.k[0] + d3 * att.k[2] + d4 * att.k[3] + d5 * att.k[4] +
                              d6 * att.k[5] + d7 * att.k[6]);
      seg.y1_ = att.y1;
      t = final_step ? t1 : t + signed_h;
      y = att.y1;
      k1 = att.k7;
      ++stats.accepted;
      stats.smallest_step = std::min(stats.smallest_step, h);
      stats.largest_step = std::max(stats.largest_step, h);
      if (on_step) on_step(seg);
      double factor = att.error == 0.0 ? kMaxFactor : kSafety * std::pow(att.error, -0.2);
      factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      h = std::min(h * factor, control.max_step);
      last_rejected = false;
    } else {
      ++stats.rejected;
      const double factor = std::max(kMinFactor, kSafety * std::pow(att.error, -0.2));
      h *= factor;
      last_rejected = true;
      if (h < control.min_step) {
        std::ostringstream os;
        os << "step " << h << " below " << control.min_step << " at t = " << t;
        throw StepSizeUnderflow(os.str());
      }
    }
  }
  return stats;
}

Vector DormandPrince::integrate_fixed(double t0, const Vector& y0, double t1, std::size_t steps,
                                      OdeStats* stats) const {
  if (steps == 0) throw InvalidArgument("fixed-step integration needs at least one step");
  const double h = (t1 - t0) / static_cast<double>(steps);
  Vector y = y0;
  if (h == 0.0) return y;
  Vector k1(y0.size());
  rhs_(t0, y, k1);
  Attempt att;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    attempt(t, y, k1, h, nullptr, att);
    y = att.y1;
    k1 = att.k7;
  }
  if (stats) {
    stats->accepted += steps;
    stats->evaluations += 1 + 6 * steps;
    stats->smallest_step = std::min(stats->smallest_step, std::abs(h));
    stats->largest_step = std::max(stats->largest_step, std::abs(h));
  }
  return y;
}

}  // namespace lyap
