#include "cql/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace cql {

namespace {

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
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double rms_scaled(const Vec3& e, const Vec3& y0, const Vec3& y1, double rtol, double atol) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    s += (e(i) / sk) * (e(i) / sk);
  }
  return std::sqrt(s / 3.0);
}

}  // namespace

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Expulsion: return "EXPULSION";
    case Stage::Transfer: return "TRANSFER";
    case Stage::Attraction: return "ATTRACTION";
    case Stage::Free: return "FREE";
  }
  return "FREE";
}

Vec3 DenseSegment::operator()(double t) const {
  const double th = h == 0.0 ? 0.0 : (t - t0) / h;
  const double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

void DenseOutput::append(const DenseOutput& other) {
  segments_.insert(segments_.end(), other.segments_.begin(), other.segments_.end());
}

Vec3 DenseOutput::operator()(double t) const {
  if (segments_.empty()) throw std::out_of_range("empty dense output");
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double x, const DenseSegment& s) { return x < s.t0; });
  if (it != segments_.begin()) --it;
  return (*it)(t);
}

void Trajectory::push(double t, const Vec3& u, double beta, Stage stage) {
  times.push_back(t);
  states.push_back(u);
  beta_values.push_back(beta);
  stages.push_back(stage);
}

void Trajectory::append(const Trajectory& other) {
  std::size_t start = 0;
  if (!times.empty() && !other.times.empty() && other.times.front() <= times.back()) start = 1;
  for (std::size_t i = start; i < other.size(); ++i)
    push(other.times[i], other.states[i], other.beta_values[i], other.stages[i]);
  psi_drift = std::max(psi_drift, other.psi_drift);
  limit_reached = limit_reached && other.limit_reached;
  dense.append(other.dense);
}

Dopri5::Dopri5(Field f, double t0, const Vec3& y0, IntegratorOptions opt)
    : f_(std::move(f)), opt_(std::move(opt)), t_(t0), y_(y0), norm2_(y0.squaredNorm()) {
  if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0)) throw std::invalid_argument("rtol and atol must be positive");
  k1_ = f_(t_, y_);
  h_ = opt_.h_init > 0.0 ? opt_.h_init : initial_step();
}

double Dopri5::initial_step() const {
  Vec3 sk;
  for (int i = 0; i < 3; ++i) sk(i) = opt_.atol + opt_.rtol * std::abs(y_(i));
  const double dnf = (k1_.array() / sk.array()).matrix().squaredNorm() / 3.0;
  const double dny = (y_.array() / sk.array()).matrix().squaredNorm() / 3.0;
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, opt_.h_max);
  const Vec3 k2 = f_(t_ + h, y_ + h * k1_);
  const double der2 = std::sqrt(((k2 - k1_).array() / sk.array()).matrix().squaredNorm() / 3.0) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, opt_.h_max});
}

bool Dopri5::step(double t_end) {
  if (t_ >= t_end) return false;
  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  while (true) {
    if (++total_ > opt_.max_steps) throw IntegrationError("maximum number of steps exceeded", t_, y_);
    double h = std::min(h_, opt_.h_max);
    bool last = false;
    if (t_ + 1.01 * h >= t_end) {
      h = t_end - t_;
      last = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_)))
      throw IntegrationError("step size underflow", t_, y_);

    const Vec3& k1 = k1_;
    const Vec3 k2 = f_(t_ + c2 * h, y_ + h * a21 * k1);
    const Vec3 k3 = f_(t_ + c3 * h, y_ + h * (a31 * k1 + a32 * k2));
    const Vec3 k4 = f_(t_ + c4 * h, y_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec3 k5 = f_(t_ + c5 * h, y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec3 k6 = f_(t_ + h, y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec3 y1 = y_ + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double t1 = last ? t_end : t_ + h;
    const Vec3 k7 = f_(t1, y1);
    const Vec3 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = rms_scaled(err, y_, y1, opt_.rtol, opt_.atol);
    if (!std::isfinite(en) || !y1.allFinite()) {
      h_ = 0.25 * h;
      last_rejected_ = true;
      continue;
    }
    const double fac11 = std::pow(en, expo1);
    double fac = fac11 / std::pow(facold_, beta);
    fac = std::max(facc2, std::min(facc1, fac / safe));
    double hnew = h / fac;
    if (en <= 1.0) {
      facold_ = std::max(en, 1e-4);
      ++accepted_;
      seg_.t0 = t_;
      seg_.h = t1 - t_;
      seg_.r1 = y_;
      seg_.r2 = y1 - y_;
      seg_.r3 = h * k1 - seg_.r2;
      seg_.r4 = seg_.r2 - h * k7 - seg_.r3;
      seg_.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t_ = t1;
      y_ = y1;
      k1_ = k7;
      if (opt_.renormalize) {
        y_ *= std::sqrt(norm2_) / y_.norm();
        k1_ = f_(t_, y_);
      }
      if (last_rejected_) hnew = std::min(hnew, h);
      last_rejected_ = false;
      h_ = hnew;
      return true;
    }
    h_ = h / std::min(facc1, fac11 / safe);
    last_rejected_ = true;
  }
}

namespace {

void record(Trajectory& tr, double t, const Vec3& u, const IntegratorOptions& opt, double psi0) {
  tr.push(t, u, opt.beta ? opt.beta(t) : 0.0, opt.stage);
  tr.psi_drift = std::max(tr.psi_drift, std::abs(u.squaredNorm() - psi0));
}

}  // namespace

Trajectory integrate(const Field& field, const Vec3& u0, double t0, double t1, const IntegratorOptions& opt) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate requires t1 > t0");
  Trajectory tr;
  const double psi0 = u0.squaredNorm();
  record(tr, t0, u0, opt, psi0);
  Dopri5 s(field, t0, u0, opt);
  while (s.step(t1)) {
    tr.dense.push(s.last_segment());
    record(tr, s.t(), s.y(), opt, psi0);
  }
  return tr;
}

Trajectory integrate_until(const Field& field, const Vec3& u0, const StopPredicate& stop, double t_max,
                           const IntegratorOptions& opt, double t0) {
  Trajectory tr;
  const double psi0 = u0.squaredNorm();
  record(tr, t0, u0, opt, psi0);
  if (stop(t0, u0)) return tr;
  if (!(t_max > t0)) throw std::invalid_argument("integrate_until requires t_max > t0");
  Dopri5 s(field, t0, u0, opt);
  while (s.step(t_max)) {
    const DenseSegment& seg = s.last_segment();
    tr.dense.push(seg);
    if (stop(s.t(), s.y())) {
      double lo = seg.t0, hi = s.t();
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (stop(mid, seg(mid)))
          hi = mid;
        else
          lo = mid;
      }
      record(tr, hi, hi == s.t() ? s.y() : seg(hi), opt, psi0);
      return tr;
    }
    record(tr, s.t(), s.y(), opt, psi0);
  }
  tr.limit_reached = false;
  return tr;
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  std::vector<double> g;
  if (!(dt > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(t0 + static_cast<double>(i) * dt);
  if (t1 - g.back() > 1e-9 * std::max(1.0, std::abs(t1))) g.push_back(t1);
  return g;
}

}  // namespace cql
