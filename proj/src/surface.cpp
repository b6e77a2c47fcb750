#include "perisurf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perisurf/errors.hpp"

namespace perisurf {

namespace {

constexpr double kEuler = 2.718281828459045235;

// exp(−1/(1−s²)) on |s| < 1.
double bump_profile(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double bump_profile_derivative(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return bump_profile(s) * (-2.0 * s / (q * q));
}

// Cell-local coordinate of t relative to cell J, or NaN outside (−π, π).
double local_coordinate(double t, int cell) {
  const double s = t - kTwoPi * cell;
  if (s <= -kPi || s >= kPi) return std::nan("");
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicProfile

PeriodicProfile::PeriodicProfile(VecR coeffs) : coeffs_(std::move(coeffs)) {}

PeriodicProfile PeriodicProfile::constant(double c, int size) {
  VecR v = VecR::Zero(std::max(size, 1));
  v[0] = c;
  return PeriodicProfile(std::move(v));
}

double PeriodicProfile::basis(int m, double t) {
  if (m == 0) return 1.0;
  const int freq = (m + 1) / 2;
  return (m % 2 == 1) ? std::cos(freq * t) : std::sin(freq * t);
}

double PeriodicProfile::basis_derivative(int m, double t) {
  if (m == 0) return 0.0;
  const int freq = (m + 1) / 2;
  return (m % 2 == 1) ? -freq * std::sin(freq * t) : freq * std::cos(freq * t);
}

double PeriodicProfile::value(double t) const {
  double v = 0.0;
  for (int m = 0; m < size(); ++m) v += coeffs_[m] * basis(m, t);
  return v;
}

double PeriodicProfile::derivative(double t) const {
  double v = 0.0;
  for (int m = 1; m < size(); ++m) v += coeffs_[m] * basis_derivative(m, t);
  return v;
}

PeriodicProfile PeriodicProfile::shifted(double dx) const {
  const double cells = dx / kTwoPi;
  if (cells == std::round(cells)) return *this;
  VecR out = coeffs_;
  // a cos(n(t+dx)) + b sin(n(t+dx)) = (a cos ndx + b sin ndx) cos nt
  //                                  + (b cos ndx − a sin ndx) sin nt
  for (int m = 1; m < size(); m += 2) {
    const int freq = (m + 1) / 2;
    const double a = coeffs_[m];
    const double b = (m + 1 < size()) ? coeffs_[m + 1] : 0.0;
    const double cs = std::cos(freq * dx);
    const double sn = std::sin(freq * dx);
    out[m] = a * cs + b * sn;
    if (m + 1 < size()) out[m + 1] = b * cs - a * sn;
  }
  return PeriodicProfile(std::move(out));
}

std::pair<double, double> PeriodicProfile::range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  constexpr int kSamples = 4096;
  for (int i = 0; i < kSamples; ++i) {
    const double v = value(-kPi + kTwoPi * i / kSamples);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// PerturbationProfile

PerturbationProfile PerturbationProfile::zero(int basis_size, int cell) {
  PerturbationProfile p;
  p.shape_ = PerturbationShape::kBumps;
  p.coeffs_ = VecR::Zero(basis_size);
  p.cell_ = cell;
  return p;
}

PerturbationProfile PerturbationProfile::bumps(VecR coeffs, int cell) {
  PerturbationProfile p;
  p.shape_ = PerturbationShape::kBumps;
  p.coeffs_ = std::move(coeffs);
  p.cell_ = cell;
  return p;
}

PerturbationProfile PerturbationProfile::analytic(PerturbationShape shape,
                                                  int cell, double scale) {
  PerturbationProfile p;
  p.shape_ = shape;
  p.cell_ = cell;
  p.scale_ = scale;
  return p;
}

double PerturbationProfile::bump_width(int basis_size) {
  return 4.0 * kPi / (basis_size + 3);
}

double PerturbationProfile::bump_center(int n, int basis_size) {
  if (basis_size <= 1) return 0.0;
  const double w = bump_width(basis_size);
  return -kPi + w + n * (kTwoPi - 2.0 * w) / (basis_size - 1);
}

double PerturbationProfile::bump(int n, int basis_size, double s) {
  const double w = bump_width(basis_size);
  return kEuler * bump_profile((s - bump_center(n, basis_size)) / w);
}

double PerturbationProfile::bump_derivative(int n, int basis_size, double s) {
  const double w = bump_width(basis_size);
  return kEuler * bump_profile_derivative((s - bump_center(n, basis_size)) / w) / w;
}

bool PerturbationProfile::is_zero() const {
  if (shape_ != PerturbationShape::kBumps) return scale_ == 0.0;
  return coeffs_.size() == 0 || coeffs_.cwiseAbs().maxCoeff() == 0.0;
}

double PerturbationProfile::local_value(double s) const {
  switch (shape_) {
    case PerturbationShape::kBumps: {
      double v = 0.0;
      for (int n = 0; n < size(); ++n) {
        if (coeffs_[n] != 0.0) v += coeffs_[n] * bump(n, size(), s);
      }
      return v;
    }
    case PerturbationShape::kExample1: {
      if (s < -3.0 || s > 3.0) return 0.0;
      const double q = s * s - 9.0;
      return scale_ * 0.00025 * q * q * q * std::sin(kPi * (s + 3.0) / 3.0);
    }
    case PerturbationShape::kExample2: {
      if (s < -3.0 || s > 3.0) return 0.0;
      return -scale_ * (1.0 + std::cos(s)) / 8.0;
    }
  }
  return 0.0;
}

double PerturbationProfile::local_derivative(double s) const {
  switch (shape_) {
    case PerturbationShape::kBumps: {
      double v = 0.0;
      for (int n = 0; n < size(); ++n) {
        if (coeffs_[n] != 0.0) v += coeffs_[n] * bump_derivative(n, size(), s);
      }
      return v;
    }
    case PerturbationShape::kExample1: {
      if (s < -3.0 || s > 3.0) return 0.0;
      const double q = s * s - 9.0;
      const double arg = kPi * (s + 3.0) / 3.0;
      return scale_ * 0.00025 *
             (6.0 * s * q * q * std::sin(arg) +
              q * q * q * std::cos(arg) * kPi / 3.0);
    }
    case PerturbationShape::kExample2: {
      if (s < -3.0 || s > 3.0) return 0.0;
      return scale_ * std::sin(s) / 8.0;
    }
  }
  return 0.0;
}

std::pair<double, double> PerturbationProfile::local_support() const {
  if (shape_ != PerturbationShape::kBumps) return {-3.0, 3.0};
  double lo = kPi;
  double hi = -kPi;
  const double w = bump_width(size());
  for (int n = 0; n < size(); ++n) {
    if (coeffs_[n] == 0.0) continue;
    lo = std::min(lo, bump_center(n, size()) - w);
    hi = std::max(hi, bump_center(n, size()) + w);
  }
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

double PerturbationProfile::value(double t) const {
  const double s = local_coordinate(t, cell_);
  return std::isnan(s) ? 0.0 : local_value(s);
}

double PerturbationProfile::derivative(double t) const {
  const double s = local_coordinate(t, cell_);
  return std::isnan(s) ? 0.0 : local_derivative(s);
}

double PerturbationProfile::basis(int n, double t) const {
  const double s = local_coordinate(t, cell_);
  return std::isnan(s) ? 0.0 : bump(n, size(), s);
}

PerturbationProfile PerturbationProfile::with_cell(int cell) const {
  PerturbationProfile p = *this;
  p.cell_ = cell;
  return p;
}

// ---------------------------------------------------------------------------
// SurfaceModel

SurfaceModel::SurfaceModel(PeriodicProfile periodic,
                           PerturbationProfile perturbation, double strip_floor,
                           double strip_ceiling, double flattening_height)
    : periodic_(std::move(periodic)),
      perturbation_(std::move(perturbation)),
      h_(strip_floor),
      H_(strip_ceiling),
      H0_(flattening_height) {
  if (periodic_.size() == 0) throw InputError("periodic profile has no coefficients");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  constexpr int kSamples = 4096;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = -kPi + kTwoPi * i / kSamples;
    const double t = s + kTwoPi * perturbation_.cell_index();
    const double v0 = periodic_.value(s);
    const double v1 = periodic_.value(t) + perturbation_.local_value(s);
    lo = std::min({lo, v0, v1});
    hi = std::max({hi, v0, v1});
  }
  if (!(h_ < lo && hi < H0_ && H0_ < H_)) {
    std::ostringstream os;
    os << "surface violates h < min ζ_p <= max ζ_p < H0 < H: h=" << h_
       << " min=" << lo << " max=" << hi << " H0=" << H0_ << " H=" << H_;
    throw DegenerateMap(os.str());
  }
}

double SurfaceModel::default_flattening_height(double strip_ceiling,
                                               double max_height) {
  return strip_ceiling - 0.05 * (strip_ceiling - max_height);
}

double SurfaceModel::height(double t, ProfileChoice choice) const {
  const double z = periodic_.value(t);
  return choice == ProfileChoice::kPeriodic ? z : z + perturbation_.value(t);
}

double SurfaceModel::slope(double t, ProfileChoice choice) const {
  const double z = periodic_.derivative(t);
  return choice == ProfileChoice::kPeriodic ? z : z + perturbation_.derivative(t);
}

SurfaceModel SurfaceModel::with_periodic(PeriodicProfile periodic) const {
  return SurfaceModel(std::move(periodic), perturbation_, h_, H_, H0_);
}

SurfaceModel SurfaceModel::with_perturbation(PerturbationProfile perturbation) const {
  return SurfaceModel(periodic_, std::move(perturbation), h_, H_, H0_);
}

double eval_surface(const SurfaceModel& model, double t) {
  return model.height(t, ProfileChoice::kPerturbed);
}

Point flatten_map(const SurfaceModel& model, ProfileChoice choice, Point x) {
  const double H0 = model.flattening_height();
  if (x.x2 >= H0) return x;
  const double h = model.floor();
  const double r = (x.x2 - H0) / (h - H0);
  return {x.x1, x.x2 + r * r * r * (model.height(x.x1, choice) - h)};
}

MapJacobian flatten_jacobian(const SurfaceModel& model, ProfileChoice choice,
                             Point x) {
  const double H0 = model.flattening_height();
  if (x.x2 >= H0) return {};
  const double h = model.floor();
  const double r = (x.x2 - H0) / (h - H0);
  MapJacobian jac;
  jac.a = r * r * r * model.slope(x.x1, choice);
  jac.b = 1.0 + 3.0 * r * r / (h - H0) * (model.height(x.x1, choice) - h);
  return jac;
}

CoefficientSample CoefficientFields::at(Point x) const {
  const MapJacobian jac = flatten_jacobian(*model_, choice_, x);
  if (jac.b <= kDetTolerance) {
    std::ostringstream os;
    os << "flattening map degenerates at (" << x.x1 << ", " << x.x2
       << "): det = " << jac.b;
    throw DegenerateMap(os.str());
  }
  CoefficientSample s;
  s.a11 = jac.b;
  s.a12 = -jac.a;
  s.a22 = (1.0 + jac.a * jac.a) / jac.b;
  s.c = jac.b;
  return s;
}

CoefficientFields coefficient_fields(const SurfaceModel& model,
                                     ProfileChoice choice) {
  return CoefficientFields(model, choice);
}

SurfaceModel translate_model(const SurfaceModel& model, int shift) {
  const auto& p = model.perturbation();
  return SurfaceModel(model.periodic().shifted(kTwoPi * shift),
                      p.with_cell(p.cell_index() - shift), model.floor(),
                      model.ceiling(), model.flattening_height());
}

}  // namespace perisurf
