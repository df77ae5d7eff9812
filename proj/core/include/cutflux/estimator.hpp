#pragma once

#include <functional>
#include <vector>

#include "cutflux/assembly.hpp"
#include "cutflux/flux.hpp"
#include "cutflux/geometry.hpp"
#include "cutflux/mesh.hpp"
#include "cutflux/spaces.hpp"

namespace cutflux {

/// A posteriori indicators and their global aggregates. Globals are the
/// square roots of the sums of squared local parts.
struct EstimatorReport {
  std::vector<double> eta_cell;        // flux mismatch per cell
  std::vector<double> eta_jump_cell;   // interface solution jump, cut cells only
  std::vector<double> eta_flux_edge;   // normal-trace jump, interior cut edges
  std::vector<double> osc_cell;        // data oscillation h_T^2/delta_T ||f - mean||^2
  double eta = 0.0;
  double eta_gamma = 0.0;
  double osc = 0.0;
};

double eta_cell_indicator(const PrimalField& u, const ProblemData& data,
                          const ReconstructedFlux& flux, int cell);
double eta_jump_indicator(const PrimalField& u, const ProblemData& data, int cell);
double eta_flux_edge_indicator(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                               const ReconstructedFlux& flux, int e);
double osc_cell_indicator(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                          int cell);

EstimatorReport compute_estimators(const PrimalField& u, const ProblemData& data,
                                   const ReconstructedFlux& flux);

/// Subdomain-wise evaluators of an exact solution, extended smoothly beyond
/// their subdomain so they can be sampled on full cut cells.
struct ExactFields {
  std::function<double(const Vec2&, int side)> u;
  std::function<Vec2(const Vec2&, int side)> grad_u;
};

/// Weighted H1-seminorm error (sum over subdomains of ||k^1/2 grad(u-u_h)||)
/// with degree-4 quadrature on the sub-polygons.
double energy_error(const PrimalField& u, const ProblemData& data, const ExactFields& exact);

/// Weighted L2 distance between K grad(u) and the reconstructed flux.
double flux_error(const PrimalField& u, const ProblemData& data, const ReconstructedFlux& flux,
                  const ExactFields& exact);

}  // namespace cutflux
