#include "cutflux/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace cutflux {

double eta_cell_indicator(const PrimalField& u, const ProblemData& data,
                          const ReconstructedFlux& flux, int cell) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  double acc = 0.0;
  for (int side = 1; side <= 2; ++side) {
    if (!cut.cell_in_side(cell, side)) continue;
    const double ki = data.k(side);
    const Vec2 kgrad = ki * u.grad(cell, side);
    // The integrand |k^-1/2 (sigma - k grad u)|^2 is quadratic in x.
    const QuadratureRule rule = quad_cell_part(mesh, cut, cell, side, 2);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 diff = eval_flux(mesh, cut, flux, cell, side, rule.points[q]) - kgrad;
      acc += rule.weights[q] * diff.squaredNorm() / ki;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

double eta_jump_indicator(const PrimalField& u, const ProblemData& data, int cell) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  if (!cut.is_cut(cell)) return 0.0;
  const CutCellGeometry& geo = cut.geom(cell);
  const KappaWeights kw = kappa_weights(data.k1, data.k2);

  const QuadratureRule seg = quad_segment(geo.gamma[0], geo.gamma[1], 2);
  double norm2 = 0.0;
  for (std::size_t q = 0; q < seg.points.size(); ++q) {
    const double j = u.interface_jump(cell, seg.points[q]);
    norm2 += seg.weights[q] * j * j;
  }
  const double hT = mesh.cell_diameter[cell];
  const double pref = std::sqrt(hT * kw.k_gamma) / std::sqrt(geo.h_min * geo.gamma_length);
  return pref * std::sqrt(std::max(norm2, 0.0));
}

double eta_flux_edge_indicator(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                               const ReconstructedFlux& flux, int e) {
  const Edge& ed = mesh.edges[e];
  if (!cut.edge_cut[e] || ed.boundary()) return 0.0;
  const CutEdgeGeometry& eg = cut.edge_geom(e);
  const KappaWeights kw = kappa_weights(data.k1, data.k2);
  const Vec2 mid = 0.5 * (mesh.vertices[ed.v0] + mesh.vertices[ed.v1]);

  // sigma.n_F is constant along the edge line per side; the jump is piecewise
  // constant over the two sub-segments.
  double norm2 = 0.0;
  for (int side = 1; side <= 2; ++side) {
    const double part = side == 1 ? eg.len1 : eg.len2;
    const Vec2 jump = eval_flux(mesh, cut, flux, ed.cell_minus, side, mid) -
                      eval_flux(mesh, cut, flux, ed.cell_plus, side, mid);
    const double jn = jump.dot(ed.normal);
    norm2 += part * jn * jn;
  }
  return std::sqrt(ed.length / kw.k_gamma) * std::sqrt(std::max(norm2, 0.0));
}

double osc_cell_indicator(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                          int cell) {
  if (!data.f) return 0.0;
  double f_int = 0.0, f2_int = 0.0;
  for (int side = 1; side <= 2; ++side) {
    if (!cut.cell_in_side(cell, side)) continue;
    const QuadratureRule rule = quad_cell_part(mesh, cut, cell, side, 4);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double fv = data.f(rule.points[q], side);
      f_int += rule.weights[q] * fv;
      f2_int += rule.weights[q] * fv * fv;
    }
  }
  const double area = mesh.cell_area[cell];
  const double var = std::max(f2_int - f_int * f_int / area, 0.0);

  const KappaWeights kw = kappa_weights(data.k1, data.k2);
  double delta;
  if (cut.is_cut(cell))
    delta = kw.k_gamma;
  else
    delta = cut.cell_class[cell] == CellClass::Inside1 ? data.k1 : data.k2;
  const double hT = mesh.cell_diameter[cell];
  return hT * hT / delta * var;  // squared contribution
}

EstimatorReport compute_estimators(const PrimalField& u, const ProblemData& data,
                                   const ReconstructedFlux& flux) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  EstimatorReport rep;
  rep.eta_cell.resize(mesh.n_cells());
  rep.eta_jump_cell.assign(mesh.n_cells(), 0.0);
  rep.eta_flux_edge.assign(mesh.n_edges(), 0.0);
  rep.osc_cell.resize(mesh.n_cells());

  double eta2 = 0.0, eta_gamma2 = 0.0, osc2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    rep.eta_cell[c] = eta_cell_indicator(u, data, flux, c);
    eta2 += rep.eta_cell[c] * rep.eta_cell[c];
    rep.osc_cell[c] = osc_cell_indicator(mesh, cut, data, c);
    osc2 += rep.osc_cell[c];
    if (cut.is_cut(c)) {
      rep.eta_jump_cell[c] = eta_jump_indicator(u, data, c);
      eta_gamma2 += rep.eta_jump_cell[c] * rep.eta_jump_cell[c];
    }
  }
  for (int e : cut.cut_edges) {
    rep.eta_flux_edge[e] = eta_flux_edge_indicator(mesh, cut, data, flux, e);
    eta_gamma2 += rep.eta_flux_edge[e] * rep.eta_flux_edge[e];
  }

  rep.eta = std::sqrt(eta2);
  rep.eta_gamma = std::sqrt(eta_gamma2);
  rep.osc = std::sqrt(osc2);
  return rep;
}

double energy_error(const PrimalField& u, const ProblemData& data, const ExactFields& exact) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      const double ki = data.k(side);
      const Vec2 gh = u.grad(c, side);
      const QuadratureRule rule = quad_cell_part(mesh, cut, c, side, 4);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 diff = exact.grad_u(rule.points[q], side) - gh;
        acc += rule.weights[q] * ki * diff.squaredNorm();
      }
    }
  return std::sqrt(std::max(acc, 0.0));
}

double flux_error(const PrimalField& u, const ProblemData& data, const ReconstructedFlux& flux,
                  const ExactFields& exact) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      const double ki = data.k(side);
      const QuadratureRule rule = quad_cell_part(mesh, cut, c, side, 4);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 diff = ki * exact.grad_u(rule.points[q], side) -
                          eval_flux(mesh, cut, flux, c, side, rule.points[q]);
        acc += rule.weights[q] * diff.squaredNorm() / ki;
      }
    }
  return std::sqrt(std::max(acc, 0.0));
}

}  // namespace cutflux
