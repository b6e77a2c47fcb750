#pragma once

#include <string>
#include <vector>

namespace perisurf {

/// One self-check with a closed-form or frozen reference.
struct OracleCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured discrepancy
  double tolerance = 0.0;  // pass when value < tolerance
  std::string detail;
};

/// Frozen J₀, Y₀, J₁, Y₁ values against hankel1_01.
OracleCheck oracle_hankel_values();
/// Parseval and round trip of the discrete Bloch transform, K = 2, 4, 8.
OracleCheck oracle_bloch_isometry();
/// Image solution on ζ ≡ 1.5, plane wave k = 3, θ = π/6, mesh n × n.
OracleCheck oracle_flat_surface(int mesh);
/// Efficiency sum on 1.5 + cos(t)/8, mesh n × n/2.
OracleCheck oracle_energy_balance(int mesh);
/// Re⟨DS h, φ⟩ = ⟨h, DS*φ⟩ on the Example-1 geometry.
OracleCheck oracle_adjoint_pairing(int truncation, int mesh, int pairs);

/// Flat-surface plane wave, energy balance, adjoint pairing, Bloch isometry
/// and special-function spot values. `quick` uses coarser meshes.
std::vector<OracleCheck> run_oracles(bool quick);

}  // namespace perisurf
