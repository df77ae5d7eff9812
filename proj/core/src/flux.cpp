#include "cutflux/flux.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace cutflux {

namespace {

int uncut_edge_side(const CutTopology& cut, const Mesh& mesh, int e) {
  // Both endpoints share the sign on an uncut edge.
  return cut.phi_vertex[mesh.edges[e].v0] < 0.0 ? 1 : 2;
}

// Assemble and solve the 6x6 system tying the RT0 pair of a cut cell to the
// immersed dofs. Unknowns x_j^i = |F_j| N_{T,j}(sigma_i) in the edge order
// (uncut edge first); rhs_edge are the dof values b_j in the same order and
// rhs_normal the right-hand side of the normal-jump row.
std::pair<RTCoeffs, RTCoeffs> solve_cut_cell_system(const Mesh& mesh, const CutTopology& cut,
                                                    int cell, const std::array<double, 3>& b_perm,
                                                    const std::array<int, 3>& perm,
                                                    double rhs_normal, double k1, double k2) {
  const CutCellGeometry& geo = cut.geom(cell);

  std::array<double, 3> alpha, beta, len;
  std::array<double, 3> w1 = {1.0, 0.0, 0.0}, w2 = {1.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const int j = perm[k];
    const int e = mesh.cell_edges[cell][j];
    const Vec2 opposite = mesh.vertices[mesh.cells[cell][j]];
    alpha[k] = (geo.x_gamma - opposite).dot(geo.n_gamma);
    beta[k] = (geo.x_gamma - opposite).dot(geo.t_gamma);
    len[k] = mesh.edges[e].length;
    if (k > 0) {
      const CutEdgeGeometry& eg = cut.edge_geom(e);
      w1[k] = eg.len1 / len[k];
      w2[k] = eg.len2 / len[k];
    }
  }

  const int side1_first = uncut_edge_side(cut, mesh, mesh.cell_edges[cell][perm[0]]);

  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();

  // Rows 0..2: reproduce the edge dofs. The uncut edge reads off the side
  // that contains it; cut edges combine both sides with sub-length weights.
  M(0, side1_first == 1 ? 0 : 3) = 1.0;
  rhs(0) = b_perm[0];
  for (int k = 1; k < 3; ++k) {
    M(k, k) = w1[k];
    M(k, 3 + k) = w2[k];
    rhs(k) = b_perm[k];
  }
  // Row 3: equal divergences.
  for (int k = 0; k < 3; ++k) {
    M(3, k) = 1.0;
    M(3, 3 + k) = -1.0;
  }
  // Row 4: normal-trace jump across the chord.
  for (int k = 0; k < 3; ++k) {
    M(4, k) = alpha[k];
    M(4, 3 + k) = -alpha[k];
  }
  rhs(4) = rhs_normal;
  // Row 5: weighted tangential jump at the chord midpoint.
  for (int k = 0; k < 3; ++k) {
    M(5, k) = beta[k] / k1;
    M(5, 3 + k) = -beta[k] / k2;
  }

  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(M);
  if (!lu.isInvertible()) {
    std::ostringstream msg;
    msg << "irt_split: singular cut-cell system on cell " << cell << " (|Gamma_T|="
        << geo.gamma_length << ", h_min=" << geo.h_min << ")";
    throw std::runtime_error(msg.str());
  }
  const Eigen::Matrix<double, 6, 1> x = lu.solve(rhs);

  RTCoeffs c1, c2;
  for (int k = 0; k < 3; ++k) {
    const int j = perm[k];
    c1.dof[j] = x(k) / len[k];
    c2.dof[j] = x(3 + k) / len[k];
  }
  return {c1, c2};
}

std::array<int, 3> cut_cell_permutation(const CutTopology& cut, int cell) {
  const int u = cut.geom(cell).uncut_local_edge;
  return {u, (u + 1) % 3, (u + 2) % 3};
}

}  // namespace

const RTCoeffs& ReconstructedFlux::coeffs(const CutTopology& cut, int cell, int side) const {
  if (!cut.cell_in_side(cell, side))
    throw std::invalid_argument("ReconstructedFlux::coeffs: cell inactive on requested side");
  return cell_coeffs[side - 1][cell];
}

std::vector<double> flux_dofs(const PrimalField& u, const ProblemData& data,
                              const MultiplierField& theta) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  std::vector<double> dofs(mesh.n_edges(), 0.0);

  for (int e = 0; e < mesh.n_edges(); ++e) {
    const Edge& ed = mesh.edges[e];
    if (cut.edge_cut[e]) {
      const CutEdgeGeometry& eg = cut.edge_geom(e);
      double v = 0.0;
      for (int side = 1; side <= 2; ++side) {
        const double ki = data.k(side);
        const double part = side == 1 ? eg.len1 : eg.len2;
        v += part * ki * mean_grad_normal(u, e, side);
        v -= ki * ed.length * theta.edge_mean(side, e);
      }
      dofs[e] = v;
    } else {
      const int side = uncut_edge_side(cut, mesh, e);
      const double ki = data.k(side);
      dofs[e] = ed.length * (ki * mean_grad_normal(u, e, side) -
                             ki * theta.edge_mean(side, e));
    }
  }
  return dofs;
}

std::pair<RTCoeffs, RTCoeffs> irt_split(const Mesh& mesh, const CutTopology& cut, int cell,
                                        const std::array<double, 3>& b, double k1, double k2) {
  if (!cut.is_cut(cell)) throw std::invalid_argument("irt_split: cell is not cut");
  const auto perm = cut_cell_permutation(cut, cell);
  const std::array<double, 3> b_perm = {b[perm[0]], b[perm[1]], b[perm[2]]};
  return solve_cut_cell_system(mesh, cut, cell, b_perm, perm, 0.0, k1, k2);
}

std::pair<RTCoeffs, RTCoeffs> sigma_g_cell(const Mesh& mesh, const CutTopology& cut, int cell,
                                           double g_mean, double k1, double k2) {
  if (!cut.is_cut(cell)) throw std::invalid_argument("sigma_g_cell: cell is not cut");
  const auto perm = cut_cell_permutation(cut, cell);
  // Edge dofs vanish; the normal-jump row absorbs the 1/(2|T|) basis factor.
  const double rhs_normal = 2.0 * mesh.cell_area[cell] * g_mean;
  return solve_cut_cell_system(mesh, cut, cell, {0.0, 0.0, 0.0}, perm, rhs_normal, k1, k2);
}

ReconstructedFlux reconstruct_flux(const PrimalField& u, const ProblemData& data,
                                   const MultiplierField& theta) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;

  ReconstructedFlux flux;
  flux.edge_dof = flux_dofs(u, data, theta);
  flux.cell_coeffs[0].assign(mesh.n_cells(), RTCoeffs{});
  flux.cell_coeffs[1].assign(mesh.n_cells(), RTCoeffs{});

  for (int c = 0; c < mesh.n_cells(); ++c) {
    std::array<double, 3> b;
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.cell_edges[c][j];
      b[j] = mesh.chi_jump_sign(e, c) * flux.edge_dof[e];
    }
    if (cut.is_cut(c)) {
      auto [c1, c2] = irt_split(mesh, cut, c, b, data.k1, data.k2);
      flux.cell_coeffs[0][c] = c1;
      flux.cell_coeffs[1][c] = c2;
    } else {
      const int side = cut.cell_class[c] == CellClass::Inside1 ? 1 : 2;
      RTCoeffs coeffs;
      for (int j = 0; j < 3; ++j)
        coeffs.dof[j] = b[j] / mesh.edges[mesh.cell_edges[c][j]].length;
      flux.cell_coeffs[side - 1][c] = coeffs;
    }
  }

  if (data.g) {
    flux.has_g = true;
    flux.g_coeffs[0].assign(mesh.n_cells(), RTCoeffs{});
    flux.g_coeffs[1].assign(mesh.n_cells(), RTCoeffs{});
    for (int c : cut.cut_cells) {
      const CutCellGeometry& geo = cut.geom(c);
      const QuadratureRule seg = quad_segment(geo.gamma[0], geo.gamma[1], 2);
      const double g_mean = seg.integrate(data.g) / geo.gamma_length;
      auto [g1, g2] = sigma_g_cell(mesh, cut, c, g_mean, data.k1, data.k2);
      flux.g_coeffs[0][c] = g1;
      flux.g_coeffs[1][c] = g2;
    }
  }

  return flux;
}

Vec2 eval_flux(const Mesh& mesh, const CutTopology& cut, const ReconstructedFlux& flux, int cell,
               int side, const Vec2& p) {
  Vec2 v = rt_eval(mesh, cell, flux.coeffs(cut, cell, side), p);
  if (flux.has_g && cut.is_cut(cell)) v += rt_eval(mesh, cell, flux.g_coeffs[side - 1][cell], p);
  return v;
}

double flux_divergence(const Mesh& mesh, const CutTopology& cut, const ReconstructedFlux& flux,
                       int cell, int side) {
  double d = rt_divergence(mesh, cell, flux.coeffs(cut, cell, side));
  if (flux.has_g && cut.is_cut(cell))
    d += rt_divergence(mesh, cell, flux.g_coeffs[side - 1][cell]);
  return d;
}

ConservationReport check_conservation(const Mesh& mesh, const CutTopology& cut,
                                      const ProblemData& data, const ReconstructedFlux& flux) {
  ConservationReport report;
  report.cell_defect.resize(mesh.n_cells());

  double max_flux_dof = 0.0;
  for (double d : flux.edge_dof) max_flux_dof = std::max(max_flux_dof, std::abs(d));

  for (int c = 0; c < mesh.n_cells(); ++c) {
    double div_int = 0.0;
    double f_int = 0.0;
    double sup_f = 0.0;
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      div_int += cut.cell_part_area(mesh, c, side) * flux_divergence(mesh, cut, flux, c, side);
      const QuadratureRule rule = quad_cell_part(mesh, cut, c, side, 2);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double fv = data.f_at(rule.points[q], side);
        f_int += rule.weights[q] * fv;
        sup_f = std::max(sup_f, std::abs(fv));
      }
    }
    report.cell_defect[c] = std::abs(div_int + f_int);
    report.max_defect = std::max(report.max_defect, report.cell_defect[c]);
    report.scale = std::max(report.scale, mesh.cell_area[c] * sup_f);
  }
  // Zero-source problems fall back to the flux magnitude as the scale.
  if (report.scale == 0.0) report.scale = std::max(max_flux_dof, 1e-300);
  return report;
}

IrtStructureReport check_irt_structure(const Mesh& mesh, const CutTopology& cut,
                                       const ProblemData& data, const ReconstructedFlux& flux) {
  IrtStructureReport rep;
  constexpr double kTiny = 1e-300;

  for (int c : cut.cut_cells) {
    const CutCellGeometry& geo = cut.geom(c);
    // Relative residuals of the three structure rows in the x_j^i = |F_j| dof
    // coordinates of the cut-cell system.
    std::array<double, 3> alpha, beta, x1, x2;
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.cell_edges[c][j];
      const Vec2 opposite = mesh.vertices[mesh.cells[c][j]];
      alpha[j] = (geo.x_gamma - opposite).dot(geo.n_gamma);
      beta[j] = (geo.x_gamma - opposite).dot(geo.t_gamma);
      x1[j] = flux.cell_coeffs[0][c].dof[j] * mesh.edges[e].length;
      x2[j] = flux.cell_coeffs[1][c].dof[j] * mesh.edges[e].length;
    }
    double rn = 0.0, rn_scale = kTiny;
    double rt = 0.0, rt_scale = kTiny;
    double rd = 0.0, rd_scale = kTiny;
    for (int j = 0; j < 3; ++j) {
      rn += alpha[j] * (x1[j] - x2[j]);
      rn_scale = std::max(rn_scale, std::abs(alpha[j]) * (std::abs(x1[j]) + std::abs(x2[j])));
      rt += beta[j] * (x1[j] / data.k1 - x2[j] / data.k2);
      rt_scale = std::max(rt_scale, std::abs(beta[j]) * (std::abs(x1[j]) / data.k1 +
                                                         std::abs(x2[j]) / data.k2));
      rd += x1[j] - x2[j];
      rd_scale = std::max(rd_scale, std::abs(x1[j]) + std::abs(x2[j]));
    }
    rep.normal_jump = std::max(rep.normal_jump, std::abs(rn) / rn_scale);
    rep.tangential_jump = std::max(rep.tangential_jump, std::abs(rt) / rt_scale);
    rep.divergence_mismatch = std::max(rep.divergence_mismatch, std::abs(rd) / rd_scale);
  }

  // Mean-zero normal jump across interior cut edges: sigma.n_F is constant
  // along the whole edge line per RT0 side, so sample at the edge midpoint.
  double dof_scale = kTiny;
  for (double d : flux.edge_dof) dof_scale = std::max(dof_scale, std::abs(d));
  for (int e : cut.cut_edges) {
    const Edge& ed = mesh.edges[e];
    if (ed.boundary()) continue;
    const CutEdgeGeometry& eg = cut.edge_geom(e);
    const Vec2 mid = 0.5 * (mesh.vertices[ed.v0] + mesh.vertices[ed.v1]);
    double mean = 0.0;
    for (int side = 1; side <= 2; ++side) {
      const double part = side == 1 ? eg.len1 : eg.len2;
      const Vec2 jm =
          rt_eval(mesh, ed.cell_minus, flux.cell_coeffs[side - 1][ed.cell_minus], mid) -
          rt_eval(mesh, ed.cell_plus, flux.cell_coeffs[side - 1][ed.cell_plus], mid);
      mean += part * jm.dot(ed.normal);
    }
    rep.mean_edge_jump = std::max(rep.mean_edge_jump, std::abs(mean) / dof_scale);
  }

  return rep;
}

}  // namespace cutflux
