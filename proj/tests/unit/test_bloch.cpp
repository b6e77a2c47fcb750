#include <doctest.h>

#include <random>

#include "perisurf/bloch.hpp"
#include "perisurf/errors.hpp"

using namespace perisurf;

namespace {

StripField random_strip(int K, int nx, int ny, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  StripField u;
  u.truncation = K;
  for (int j = -K; j <= K; ++j) {
    CellField c(nx, ny);
    for (int i = 0; i < c.values.size(); ++i) c.values[i] = cplx(g(gen), g(gen));
    u.cells.push_back(c);
  }
  return u;
}

double strip_norm2(const StripField& u) {
  double s = 0;
  for (const auto& c : u.cells) s += weighted_norm2(c);
  return s;
}

}  // namespace

TEST_CASE("single-cell strips transform to pure phases") {
  StripField u = random_strip(3, 4, 3, 1);
  for (auto& c : u.cells) c.values.setZero();
  u.cell(1).values.setConstant(cplx(2.0, -1.0));
  const BlochField w = bloch_forward(u);
  for (int q = 0; q < w.grid.size(); ++q) {
    const cplx expected = cplx(2.0, -1.0) * std::polar(1.0, kTwoPi * w.grid.node(q));
    CHECK(std::abs(w.fields[q].values[5] - expected) < 1e-14);
  }
}

TEST_CASE("round trip and Parseval") {
  for (int K : {2, 4, 8}) {
    for (double shift : {0.0, 0.5 / (2 * K + 1)}) {
      const StripField u = random_strip(K, 5, 4, 10 + K);
      const AlphaGrid grid(K, shift);
      const BlochField w = bloch_forward(u, grid);
      const StripField back = bloch_inverse(w);
      double err = 0;
      for (int j = -K; j <= K; ++j) {
        err = std::max(err, (back.cell(j).values - u.cell(j).values).cwiseAbs().maxCoeff());
      }
      CHECK(err < 1e-12);
      double wn = 0;
      for (const auto& f : w.fields) wn += weighted_norm2(f);
      wn /= grid.size();
      CHECK(std::abs(wn - strip_norm2(u)) / strip_norm2(u) < 1e-12);
      const CellField c0 = central_cell_restriction(w);
      CHECK((c0.values - u.cell(0).values).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("constant families invert to the central cell") {
  BlochField w;
  w.grid = AlphaGrid(4);
  CellField psi(3, 2);
  psi.values.setConstant(cplx(0.5, 0.25));
  w.fields.assign(w.grid.size(), psi);
  const StripField u = bloch_inverse(w);
  CHECK((u.cell(0).values - psi.values).norm() < 1e-14);
  CHECK(u.cell(2).values.norm() < 1e-14);
}

TEST_CASE("mismatched cells are rejected") {
  StripField u = random_strip(1, 3, 3, 2);
  u.cells[0] = CellField(4, 3);
  CHECK_THROWS_AS(bloch_forward(u), MeshMismatch);
}

TEST_CASE("anomaly avoiding grid") {
  // k = 3 puts α = 0 on an anomaly for the unshifted odd grid
  const AlphaGrid plain(4);
  CHECK(plain.near_anomaly(3.0, 1e-6));
  const AlphaGrid safe = AlphaGrid::avoiding_anomalies(4, 3.0);
  CHECK_FALSE(safe.near_anomaly(3.0, 1e-6));
}
