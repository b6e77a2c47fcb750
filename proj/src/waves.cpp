#include "perisurf/waves.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perisurf/errors.hpp"
#include "perisurf/special.hpp"

namespace perisurf {

cplx FundamentalSolution::value(Point x, Point y) const {
  const double r = std::hypot(x.x1 - y.x1, x.x2 - y.x2);
  if (r == 0.0) throw SingularPoint("fundamental solution evaluated at its source");
  return 0.25 * kI * hankel1(0, k_ * r);
}

void FundamentalSolution::value_and_gradient(Point x, Point y, cplx& value, cplx& d1,
                                             cplx& d2) const {
  const double dx = x.x1 - y.x1;
  const double dy = x.x2 - y.x2;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) throw SingularPoint("fundamental solution evaluated at its source");
  cplx h0, h1;
  hankel1_01(k_ * r, h0, h1);
  value = 0.25 * kI * h0;
  // d/dr H0 = −H1
  const cplx dr = -0.25 * kI * k_ * h1;
  d1 = dr * (dx / r);
  d2 = dr * (dy / r);
}

double HerglotzDensity::operator()(double t) const {
  if (t < lower || t > upper) return 0.0;
  const double s = (t - lower) / (upper - lower);
  const double q = s * (1.0 - s);
  return 4096.0 * q * q * q * q * q * q;
}

IncidentField IncidentField::plane_wave(double k, double theta, bool upward) {
  IncidentField f;
  f.kind = IncidentKind::kPlaneWave;
  f.wavenumber = k;
  f.angle = theta;
  f.upward = upward;
  return f;
}

IncidentField IncidentField::point_source(double k, Point y) {
  IncidentField f;
  f.kind = IncidentKind::kPointSource;
  f.wavenumber = k;
  f.source = y;
  return f;
}

IncidentField IncidentField::herglotz(double k, HerglotzDensity g, double shift) {
  IncidentField f;
  f.kind = IncidentKind::kHerglotz;
  f.wavenumber = k;
  f.density = g;
  f.shift = shift;
  return f;
}

IncidentField IncidentField::shifted(double dx) const {
  IncidentField f = *this;
  f.shift += dx;
  return f;
}

namespace {

struct HerglotzRule {
  VecR nodes;
  VecR weights;  // includes g(t)
};

// Composite rule of `panels` Gauss panels with the density's node count each.
HerglotzRule herglotz_rule(const HerglotzDensity& g, int panels) {
  HerglotzRule rule;
  const int n = g.quadrature_order;
  rule.nodes.resize(n * panels);
  rule.weights.resize(n * panels);
  const double width = (g.upper - g.lower) / panels;
  VecR x, w;
  for (int p = 0; p < panels; ++p) {
    gauss_legendre(n, g.lower + p * width, g.lower + (p + 1) * width, x, w);
    rule.nodes.segment(p * n, n) = x;
    rule.weights.segment(p * n, n) = w;
  }
  for (int i = 0; i < rule.nodes.size(); ++i) rule.weights[i] *= g(rule.nodes[i]);
  return rule;
}

// The phase k(x₁ sin t − x₂ cos t) varies by at most k(|x₁| + |x₂|)·(b − a) over
// the support; each panel is kept below 40 radians so the rule stays exact to
// rounding for any evaluation point.
int panel_count(const HerglotzDensity& g, double k, Point x) {
  const double phase = k * (std::abs(x.x1) + std::abs(x.x2)) * (g.upper - g.lower);
  return std::max(1, static_cast<int>(std::ceil(phase / 40.0)));
}

const HerglotzRule& cached_rule(const HerglotzDensity& g, int panels) {
  struct Entry {
    HerglotzDensity key;
    int panels;
    HerglotzRule rule;
  };
  thread_local std::vector<Entry> cache;
  for (const Entry& e : cache) {
    if (e.panels == panels && e.key.lower == g.lower && e.key.upper == g.upper &&
        e.key.quadrature_order == g.quadrature_order) {
      return e.rule;
    }
  }
  if (cache.size() > 64) cache.clear();
  cache.push_back({g, panels, herglotz_rule(g, panels)});
  return cache.back().rule;
}

}  // namespace

FieldSample eval_incident(const IncidentField& field, Point x) {
  const double k = field.wavenumber;
  const Point xs{x.x1 + field.shift, x.x2};
  FieldSample out;
  switch (field.kind) {
    case IncidentKind::kPlaneWave: {
      const double d1 = std::sin(field.angle);
      const double d2 = field.upward ? std::cos(field.angle) : -std::cos(field.angle);
      out.value = std::polar(1.0, k * (d1 * xs.x1 + d2 * xs.x2));
      out.d1 = kI * k * d1 * out.value;
      out.d2 = kI * k * d2 * out.value;
      break;
    }
    case IncidentKind::kPointSource: {
      FundamentalSolution(k).value_and_gradient(xs, field.source, out.value, out.d1,
                                                out.d2);
      break;
    }
    case IncidentKind::kHerglotz: {
      const HerglotzRule& rule = cached_rule(field.density, panel_count(field.density, k, xs));
      out = {};
      for (int i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        const double s = std::sin(t);
        const double c = std::cos(t);
        const cplx e = rule.weights[i] * std::polar(1.0, k * (xs.x1 * s - xs.x2 * c));
        out.value += e;
        out.d1 += kI * k * s * e;
        out.d2 -= kI * k * c * e;
      }
      break;
    }
  }
  return out;
}

cplx dtn_symbol(double xi, double k) {
  const double d = k * k - xi * xi;
  if (d >= 0.0) return kI * std::sqrt(d);
  return {-std::sqrt(-d), 0.0};
}

VecC dtn_symbol_apply(const VecC& coeffs, double alpha, double k) {
  const int modes = static_cast<int>(coeffs.size() - 1) / 2;
  VecC out(coeffs.size());
  for (int j = -modes; j <= modes; ++j) {
    out[j + modes] = dtn_symbol(j - alpha, k) * coeffs[j + modes];
  }
  return out;
}

cplx boundary_data_f(const IncidentField& field, double H, double x1) {
  const double k = field.wavenumber;
  switch (field.kind) {
    case IncidentKind::kPlaneWave: {
      if (field.upward) return 0.0;
      const FieldSample s = eval_incident(field, {x1, H});
      return -2.0 * kI * k * std::cos(field.angle) * s.value;
    }
    case IncidentKind::kPointSource:
      return 0.0;
    case IncidentKind::kHerglotz: {
      const double xs = x1 + field.shift;
      const HerglotzRule& rule =
          cached_rule(field.density, panel_count(field.density, k, {xs, H}));
      cplx f = 0.0;
      for (int i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        const double c = std::cos(t);
        f += rule.weights[i] * (-2.0 * kI * k * c) *
             std::polar(1.0, k * (xs * std::sin(t) - H * c));
      }
      return f;
    }
  }
  return 0.0;
}

cplx boundary_data_bloch(const IncidentField& field, double H, const AlphaGrid& grid,
                         int q, double x1) {
  cplx F = 0.0;
  for (int j = -grid.truncation(); j <= grid.truncation(); ++j) {
    F += boundary_data_f(field, H, x1 + kTwoPi * j) * grid.phase(j, q);
  }
  return F;
}

GreensSplit::GreensSplit(double wavenumber, Point source, double reference_height)
    : phi_(wavenumber), y_(source) {
  if (!(source.x2 > reference_height)) {
    std::ostringstream os;
    os << "point source at height " << source.x2
       << " must lie above the reference height " << reference_height;
    throw InputError(os.str());
  }
  image_ = {source.x1, 2.0 * reference_height - source.x2};
}

cplx GreensSplit::value(Point x) const {
  return phi_.value(x, y_) - phi_.value(x, image_);
}

FieldSample GreensSplit::image_term(Point x) const {
  FieldSample s;
  phi_.value_and_gradient(x, image_, s.value, s.d1, s.d2);
  return s;
}

GreensSplit greens_split_point_source(double wavenumber, Point y,
                                      double reference_height) {
  return GreensSplit(wavenumber, y, reference_height);
}

}  // namespace perisurf
