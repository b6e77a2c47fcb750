#include "perisurf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perisurf/errors.hpp"
#include "perisurf/parallel.hpp"
#include "perisurf/special.hpp"

namespace perisurf {

void SamplingGrid::validate() const {
  if (!(a < b) || !(c < d) || m1 < 2 || m2 < 1) {
    std::ostringstream os;
    os << "invalid sampling grid [" << a << ", " << b << "] x [" << c << ", " << d
       << "] with " << m1 << " x " << m2 << " points";
    throw InputError(os.str());
  }
}

namespace {

struct Kernel {
  VecC phi_conj;   // conj Φ(x_i, z)
  VecC dphi_conj;  // conj ∂Φ/∂x₂(x_i, z)
};

void fill_kernel(const CauchyData& ref, Point z, double k, Kernel& ker) {
  const int n = static_cast<int>(ref.points.size());
  ker.phi_conj.resize(n);
  ker.dphi_conj.resize(n);
  const double dz = ref.height - z.x2;
  for (int i = 0; i < n; ++i) {
    const double dx = ref.points[i] - z.x1;
    const double r = std::hypot(dx, dz);
    cplx h0, h1;
    hankel1_01(k * r, h0, h1);
    const cplx phi = 0.25 * kI * h0;
    const cplx dphi = -0.25 * kI * k * h1 * (dz / r);
    ker.phi_conj[i] = std::conj(phi);
    ker.dphi_conj[i] = std::conj(dphi);
  }
}

double imaging_with_kernel(const Kernel& ker, Point z, const std::vector<CauchyData>& data,
                           const std::vector<Point>& sources, int R, double k) {
  const double dtheta = kPi / R;
  const double hmea = data[0].points.size() > 1 ? data[0].points[1] - data[0].points[0] : 0.0;
  double total = 0.0;
  for (size_t j = 0; j < data.size(); ++j) {
    const CauchyData& cd = data[j];
    cplx s = 0.0;
    for (int i = 0; i < cd.values.size(); ++i) {
      s += cd.normals[i] * ker.phi_conj[i] - cd.values[i] * ker.dphi_conj[i];
    }
    s *= hmea;
    // y′ − z′ with y′ = (y₁, −y₂), z′ = (z₁, −z₂)
    const double v1 = sources[j].x1 - z.x1;
    const double v2 = -sources[j].x2 + z.x2;
    // directions (cos t, sin t), t ∈ [−π, 0], sweep the lower half circle
    cplx half = 0.0;
    for (int m = 0; m <= R; ++m) {
      const double t = -kPi + m * dtheta;
      half += std::polar(1.0, k * (std::cos(t) * v1 + std::sin(t) * v2));
    }
    s -= kI * dtheta / (4.0 * kPi) * half;
    total += std::norm(s);
  }
  return total;
}

void check_inputs(const std::vector<CauchyData>& data, const std::vector<Point>& sources,
                  int R) {
  if (data.size() != sources.size()) throw InputError("one Cauchy data set per source required");
  if (R < 1) throw InputError("half-circle order must be positive");
  for (const auto& d : data) {
    if (d.points != data[0].points || d.height != data[0].height) {
      throw InputError("Cauchy data sets must share one measurement grid");
    }
  }
}

}  // namespace

double imaging_value(Point z, const std::vector<CauchyData>& data,
                     const std::vector<Point>& sources, int half_circle_order,
                     double wavenumber) {
  check_inputs(data, sources, half_circle_order);
  Kernel ker;
  if (!data.empty()) fill_kernel(data[0], z, wavenumber, ker);
  return imaging_with_kernel(ker, z, data, sources, half_circle_order, wavenumber);
}

IndicatorMatrix indicator_matrix(const SamplingGrid& grid,
                                 const std::vector<CauchyData>& data,
                                 const std::vector<Point>& sources,
                                 int half_circle_order, double wavenumber) {
  grid.validate();
  check_inputs(data, sources, half_circle_order);
  IndicatorMatrix out;
  out.values.resize(grid.m1, grid.m2);
  out.argmax.assign(grid.m1, 1);
  parallel_for(grid.m1, [&](int row) {
    Kernel ker;
    for (int col = 0; col < grid.m2; ++col) {
      const Point z{grid.z1(row), grid.z2(col)};
      if (!data.empty()) fill_kernel(data[0], z, wavenumber, ker);
      out.values(row, col) =
          imaging_with_kernel(ker, z, data, sources, half_circle_order, wavenumber);
    }
    Eigen::Index best;
    out.values.row(row).maxCoeff(&best);
    out.argmax[row] = static_cast<int>(best) + 1;
  });
  return out;
}

double estimate_c0(const IndicatorMatrix& matrix, const SamplingGrid& grid) {
  double sum = 0.0;
  for (int m : matrix.argmax) sum += m;
  return grid.c + (grid.d - grid.c) * sum / (static_cast<double>(grid.m1) * grid.m2);
}

int estimate_J(const IndicatorMatrix& matrix, const SamplingGrid& grid,
               LocationReport* report) {
  constexpr int kBins = 32;
  // argmax height per row
  std::vector<double> height(grid.m1);
  for (int r = 0; r < grid.m1; ++r) height[r] = grid.z2(matrix.argmax[r] - 1);

  const int first = static_cast<int>(std::ceil((grid.a + kPi) / kTwoPi - 1e-12));
  const int last = static_cast<int>(std::floor((grid.b - kPi) / kTwoPi + 1e-12));
  if (last - first + 1 < 3) throw InputError("sampling grid must span at least three complete cells");

  // profile of each complete cell at kBins local abscissae, by linear interpolation
  std::vector<int> cells;
  std::vector<std::vector<double>> profiles;
  const double dz = (grid.b - grid.a) / (grid.m1 - 1);
  for (int j = first; j <= last; ++j) {
    std::vector<double> prof(kBins);
    for (int b = 0; b < kBins; ++b) {
      const double x = kTwoPi * j - kPi + kTwoPi * (b + 0.5) / kBins;
      const double pos = (x - grid.a) / dz;
      const int r0 = std::clamp(static_cast<int>(std::floor(pos)), 0, grid.m1 - 2);
      const double f = std::clamp(pos - r0, 0.0, 1.0);
      prof[b] = (1.0 - f) * height[r0] + f * height[r0 + 1];
    }
    cells.push_back(j);
    profiles.push_back(std::move(prof));
  }
  std::vector<double> median(kBins);
  for (int b = 0; b < kBins; ++b) {
    std::vector<double> v;
    for (const auto& p : profiles) v.push_back(p[b]);
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    median[b] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  std::vector<double> dev(cells.size(), 0.0);
  for (size_t i = 0; i < cells.size(); ++i) {
    for (int b = 0; b < kBins; ++b) dev[i] += std::abs(profiles[i][b] - median[b]) * kTwoPi / kBins;
  }
  std::vector<size_t> order(cells.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return dev[x] > dev[y]; });
  if (report) {
    report->cells = cells;
    report->deviations = dev;
    report->best = cells[order[0]];
  }
  const double top = dev[order[0]];
  const double second = dev[order[1]];
  // identical profiles differ only by interpolation round-off
  const double floor = 1e-9 * (grid.d - grid.c) * kTwoPi;
  if (top <= floor || second >= 0.9 * top) {
    std::ostringstream os;
    os << "perturbation location is ambiguous: largest cell deviations " << top << " (cell "
       << cells[order[0]] << ") and " << second << " (cell " << cells[order[1]] << ")";
    throw AmbiguousLocation(os.str());
  }
  return cells[order[0]];
}

}  // namespace perisurf
