#pragma once

#include <array>
#include <vector>

#include "cutflux/assembly.hpp"
#include "cutflux/geometry.hpp"
#include "cutflux/mesh.hpp"
#include "cutflux/spaces.hpp"

namespace cutflux {

/// Conservative flux in the immersed lowest-order Raviart-Thomas space.
/// Uncut cells carry one RT0 function on their own side; cut cells carry a
/// pair (side 1, side 2) satisfying the immersed-space conditions, plus an
/// optional correction pair for a non-homogeneous interface flux jump.
struct ReconstructedFlux {
  std::vector<double> edge_dof;                    // per edge: integral of sigma.n_F
  std::array<std::vector<RTCoeffs>, 2> cell_coeffs;  // per side, per cell
  std::array<std::vector<RTCoeffs>, 2> g_coeffs;     // sigma^g pair on cut cells
  bool has_g = false;

  const RTCoeffs& coeffs(const CutTopology& cut, int cell, int side) const;
};

/// Per-edge flux degrees of freedom from the mean numerical flux corrected
/// by the multiplier: integral over F of sigma.n_F.
std::vector<double> flux_dofs(const PrimalField& u, const ProblemData& data,
                              const MultiplierField& theta);

/// Solve the 6x6 cut-cell system expressing the RT0 pair of a cut cell in
/// terms of the immersed-space dof triple b_j (integrals against the outward
/// normal). Returns (side-1, side-2) coefficients.
std::pair<RTCoeffs, RTCoeffs> irt_split(const Mesh& mesh, const CutTopology& cut, int cell,
                                        const std::array<double, 3>& b, double k1, double k2);

/// Correction pair with zero edge dofs, normal jump equal to the mean of g
/// on the chord, matched divergences and zero tangential jump.
std::pair<RTCoeffs, RTCoeffs> sigma_g_cell(const Mesh& mesh, const CutTopology& cut, int cell,
                                           double g_mean, double k1, double k2);

/// Full reconstruction: edge dofs, per-cell coefficients, cut-cell pairs and
/// (when g is present) the interface correction.
ReconstructedFlux reconstruct_flux(const PrimalField& u, const ProblemData& data,
                                   const MultiplierField& theta);

Vec2 eval_flux(const Mesh& mesh, const CutTopology& cut, const ReconstructedFlux& flux, int cell,
               int side, const Vec2& p);

/// Divergence of the (discrete) flux on T cap Omega^side, including the
/// correction pair when present.
double flux_divergence(const Mesh& mesh, const CutTopology& cut, const ReconstructedFlux& flux,
                       int cell, int side);

struct ConservationReport {
  std::vector<double> cell_defect;  // |divergence integral + source integral|
  double max_defect = 0.0;
  double scale = 0.0;  // max over cells of |T| * sup|f|, with a flux fallback
};

/// Elementwise conservation defect of the reconstructed flux against the
/// quadrature representation of f used during assembly.
ConservationReport check_conservation(const Mesh& mesh, const CutTopology& cut,
                                      const ProblemData& data, const ReconstructedFlux& flux);

/// Max violations of the immersed-space structure on cut cells: normal-jump,
/// weighted tangential jump at the chord midpoint, divergence mismatch, all
/// relative to the local flux magnitude.
struct IrtStructureReport {
  double normal_jump = 0.0;
  double tangential_jump = 0.0;
  double divergence_mismatch = 0.0;
  double mean_edge_jump = 0.0;  // mean-zero condition on cut edges
};
IrtStructureReport check_irt_structure(const Mesh& mesh, const CutTopology& cut,
                                       const ProblemData& data, const ReconstructedFlux& flux);

}  // namespace cutflux
