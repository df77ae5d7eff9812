#include "cutflux/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cutflux {

double hat_value(const Mesh& mesh, int cell, int local_vertex, const Vec2& p) {
  const auto& [a, b, c] = mesh.cells[cell];
  const Vec2 &pa = mesh.vertices[a], &pb = mesh.vertices[b], &pc = mesh.vertices[c];
  const double invA = 1.0 / mesh.cell_area[cell];
  switch (local_vertex) {
    case 0: return signed_area(p, pb, pc) * invA;
    case 1: return signed_area(pa, p, pc) * invA;
    case 2: return signed_area(pa, pb, p) * invA;
    default: throw std::invalid_argument("hat_value: local vertex out of range");
  }
}

double normal_gradient_jump(const PrimalField& u, int e, int side, int cell) {
  const Mesh& mesh = *u.mesh;
  const Edge& ed = mesh.edges[e];
  if (ed.boundary()) throw std::invalid_argument("normal_gradient_jump: boundary edge");
  const int other = (ed.cell_minus == cell) ? ed.cell_plus : ed.cell_minus;
  const Vec2 n_out = mesh.outward_normal(e, cell);
  return (u.grad(cell, side) - u.grad(other, side)).dot(n_out);
}

double mean_grad_normal(const PrimalField& u, int e, int side) {
  const Mesh& mesh = *u.mesh;
  const Edge& ed = mesh.edges[e];
  const Vec2 gm = u.grad(ed.cell_minus, side);
  if (ed.boundary()) return gm.dot(ed.normal);
  const Vec2 gp = u.grad(ed.cell_plus, side);
  return 0.5 * (gm + gp).dot(ed.normal);
}

namespace {

// Integral of the hat function of (cell, local) over the segment [a,b],
// exact since hats are linear: length * (phi(a)+phi(b))/2.
double hat_segment_integral(const Mesh& mesh, int cell, int local, const Vec2& a, const Vec2& b) {
  return (b - a).norm() * 0.5 *
         (hat_value(mesh, cell, local, a) + hat_value(mesh, cell, local, b));
}

}  // namespace

LinearSystem assemble_system(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                             const ChDofMap& dofmap) {
  if (!(data.k1 > 0.0) || !(data.k2 > 0.0) || !(data.gamma > 0.0) || !(data.gamma_g > 0.0))
    throw std::invalid_argument("assemble_system: coefficients must be positive");

  const KappaWeights kw = kappa_weights(data.k1, data.k2);
  std::vector<Triplet> triplets;
  triplets.reserve(24 * mesh.n_cells());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dofmap.n_dofs);

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto grads = p1_gradients(mesh, c);
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      const double ki = data.k(side);
      std::array<int, 3> dof;
      for (int j = 0; j < 3; ++j) dof[j] = dofmap.dof(side, mesh.cells[c][j]);

      const double part_area = cut.cell_part_area(mesh, c, side);
      for (int a = 0; a < 3; ++a)
        for (int bb = 0; bb < 3; ++bb)
          triplets.emplace_back(dof[a], dof[bb], ki * part_area * grads[a].dot(grads[bb]));

      if (data.f) {
        const QuadratureRule rule = quad_cell_part(mesh, cut, c, side, 2);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const double fw = rule.weights[q] * data.f(rule.points[q], side);
          for (int a = 0; a < 3; ++a) b[dof[a]] += fw * hat_value(mesh, c, a, rule.points[q]);
        }
      }
    }

    if (!cut.is_cut(c)) continue;

    // Interface terms on the chord: penalty, consistency and symmetry.
    const CutCellGeometry& geo = cut.geom(c);
    const double hT = mesh.cell_diameter[c];
    const QuadratureRule seg = quad_segment(geo.gamma[0], geo.gamma[1], 2);

    std::array<int, 6> dof;
    for (int j = 0; j < 3; ++j) {
      dof[j] = dofmap.dof(1, mesh.cells[c][j]);
      dof[3 + j] = dofmap.dof(2, mesh.cells[c][j]);
    }
    // Weighted co-normal flux of basis a: {K grad(phi_a) . n_gamma}.
    std::array<double, 6> wflux;
    for (int j = 0; j < 3; ++j) {
      wflux[j] = kw.omega1 * data.k1 * grads[j].dot(geo.n_gamma);
      wflux[3 + j] = kw.omega2 * data.k2 * grads[j].dot(geo.n_gamma);
    }

    for (std::size_t q = 0; q < seg.points.size(); ++q) {
      const double w = seg.weights[q];
      std::array<double, 3> hv;
      for (int j = 0; j < 3; ++j) hv[j] = hat_value(mesh, c, j, seg.points[q]);
      std::array<double, 6> jump;  // [phi_a] = phi_a,1 - phi_a,2
      for (int j = 0; j < 3; ++j) {
        jump[j] = hv[j];
        jump[3 + j] = -hv[j];
      }
      for (int a = 0; a < 6; ++a)
        for (int bb = 0; bb < 6; ++bb)
          triplets.emplace_back(dof[a], dof[bb],
                                w * (data.gamma * kw.k_gamma / hT * jump[a] * jump[bb] -
                                     wflux[a] * jump[bb] - wflux[bb] * jump[a]));
      if (data.g) {
        const double gw = w * data.g(seg.points[q]);
        for (int j = 0; j < 3; ++j) {
          b[dof[j]] += gw * kw.omega2 * hv[j];      // {v}* weight of side 1
          b[dof[3 + j]] += gw * kw.omega1 * hv[j];  // and of side 2
        }
      }
    }
  }

  // Ghost penalty on interior edges near the interface, over full edges.
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const Edge& ed = mesh.edges[e];
    for (int side = 1; side <= 2; ++side) {
      if (!cut.edge_in_ghost(e, side)) continue;
      const double ki = data.k(side);
      // Jump coefficients of the global basis: grad(phi_dof) . n_F from both cells.
      std::array<std::pair<int, double>, 6> terms;
      int nterms = 0;
      for (int pass = 0; pass < 2; ++pass) {
        const int cc = pass == 0 ? ed.cell_minus : ed.cell_plus;
        const double sign = pass == 0 ? 1.0 : -1.0;
        const auto grads = p1_gradients(mesh, cc);
        for (int j = 0; j < 3; ++j) {
          const int d = dofmap.dof(side, mesh.cells[cc][j]);
          const double coef = sign * grads[j].dot(ed.normal);
          bool merged = false;
          for (int t = 0; t < nterms; ++t)
            if (terms[t].first == d) {
              terms[t].second += coef;
              merged = true;
              break;
            }
          if (!merged) terms[nterms++] = {d, coef};
        }
      }
      // h_F * integral of two constants over F gives the h_F^2 weight.
      const double scale = data.gamma_g * ki * ed.length * ed.length;
      for (int s = 0; s < nterms; ++s)
        for (int t = 0; t < nterms; ++t)
          triplets.emplace_back(terms[s].first, terms[t].first,
                                scale * terms[s].second * terms[t].second);
    }
  }

  // Strong Dirichlet data: interpolate at boundary dofs, eliminate symmetrically.
  Eigen::VectorXd lifted = Eigen::VectorXd::Zero(dofmap.n_dofs);
  for (int d = 0; d < dofmap.n_dofs; ++d)
    if (dofmap.dirichlet[d] && data.dirichlet)
      lifted[d] = data.dirichlet(mesh.vertices[dofmap.dof_vertex[d]], dofmap.dof_side[d]);

  std::vector<Triplet> reduced;
  reduced.reserve(triplets.size() + dofmap.n_dofs);
  for (const Triplet& t : triplets) {
    const bool dr = dofmap.dirichlet[t.row()];
    const bool dc = dofmap.dirichlet[t.col()];
    if (!dr && dc) {
      b[t.row()] -= t.value() * lifted[t.col()];
      continue;
    }
    if (dr || dc) continue;
    reduced.push_back(t);
  }
  for (int d = 0; d < dofmap.n_dofs; ++d)
    if (dofmap.dirichlet[d]) {
      reduced.emplace_back(d, d, 1.0);
      b[d] = lifted[d];
    }

  LinearSystem sys;
  sys.A = sparse_from_triplets(dofmap.n_dofs, dofmap.n_dofs, reduced);
  sys.b = std::move(b);
  return sys;
}

double assemble_residual(const PrimalField& u, const ProblemData& data, int cell, int vertex,
                         int side) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  if (!cut.cell_in_side(cell, side))
    throw std::invalid_argument("assemble_residual: cell inactive on requested side");
  const int local = mesh.local_vertex(cell, vertex);
  if (local < 0) throw std::invalid_argument("assemble_residual: vertex not in cell");

  const double ki = data.k(side);
  double r = 0.0;

  // Element source term over T cap Omega^i.
  const QuadratureRule rule = quad_cell_part(mesh, cut, cell, side, 2);
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    r += rule.weights[q] * data.f_at(rule.points[q], side) *
         hat_value(mesh, cell, local, rule.points[q]);

  // Interface terms.
  if (cut.is_cut(cell)) {
    const CutCellGeometry& geo = cut.geom(cell);
    const KappaWeights kw = kappa_weights(data.k1, data.k2);
    const double hT = mesh.cell_diameter[cell];
    const double jump_kgrad_n =
        (data.k1 * u.grad(cell, 1) - data.k2 * u.grad(cell, 2)).dot(geo.n_gamma);
    const double dphi_n = p1_gradients(mesh, cell)[local].dot(geo.n_gamma);

    const QuadratureRule seg = quad_segment(geo.gamma[0], geo.gamma[1], 2);
    double int_g_phi = 0.0, int_phi = 0.0, int_jump = 0.0, int_jump_phi = 0.0;
    for (std::size_t q = 0; q < seg.points.size(); ++q) {
      const double w = seg.weights[q];
      const double hv = hat_value(mesh, cell, local, seg.points[q]);
      const double ju = u.interface_jump(cell, seg.points[q]);
      int_phi += w * hv;
      int_jump += w * ju;
      int_jump_phi += w * ju * hv;
      if (data.g) int_g_phi += w * data.g(seg.points[q]) * hv;
    }

    if (side == 1) {
      r += kw.omega2 * (int_g_phi - jump_kgrad_n * int_phi);
      r += kw.omega1 * data.k1 * dphi_n * int_jump;
      r -= data.gamma / hT * kw.k_gamma * int_jump_phi;
    } else {
      r += kw.omega1 * (int_g_phi - jump_kgrad_n * int_phi);
      r += kw.omega2 * data.k2 * dphi_n * int_jump;
      r += data.gamma / hT * kw.k_gamma * int_jump_phi;
    }
  }

  // Element-boundary terms: half normal-gradient jumps on the side part of
  // each interior edge, and ghost-penalty contributions on full edges.
  const Vec2 dphi = p1_gradients(mesh, cell)[local];
  for (int j = 0; j < 3; ++j) {
    const int e = mesh.cell_edges[cell][j];
    const Edge& ed = mesh.edges[e];
    if (ed.boundary()) continue;

    Vec2 a, b;
    if (cut.edge_in_Fh(e, side) && cut.edge_part(mesh, e, side, a, b)) {
      const double jump_dn = normal_gradient_jump(u, e, side, cell);
      r -= 0.5 * ki * jump_dn * hat_segment_integral(mesh, cell, local, a, b);
    }
    if (cut.edge_in_ghost(e, side)) {
      const double jump_dn = normal_gradient_jump(u, e, side, cell);
      const double dphi_jump = dphi.dot(mesh.outward_normal(e, cell));
      r -= data.gamma_g * ed.length * ed.length * ki * jump_dn * dphi_jump;
    }
  }

  return r;
}

ResidualTable assemble_residual_table(const PrimalField& u, const ProblemData& data) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  ResidualTable table;
  table.r[0].assign(3 * mesh.n_cells(), 0.0);
  table.r[1].assign(3 * mesh.n_cells(), 0.0);
  double term_scale = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      for (int j = 0; j < 3; ++j) {
        const double v = assemble_residual(u, data, c, mesh.cells[c][j], side);
        table.r[side - 1][3 * c + j] = v;
        table.scale = std::max(table.scale, std::abs(v));
      }
      const double h = mesh.cell_diameter[c];
      const double ki = data.k(side);
      const double gmag = u.grad(c, side).norm();
      double umax = 0.0;
      for (int j = 0; j < 3; ++j)
        umax = std::max(umax, std::abs(u.coeff[u.dofmap->dof(side, mesh.cells[c][j])]));
      term_scale = std::max(term_scale,
                            h * h * std::abs(data.f_at(mesh.centroid(c), side)) +
                                ki * h * (h * gmag * (2.0 + data.gamma_g) +
                                          data.gamma * umax));
    }
  table.noise = 1e-13 * term_scale;
  return table;
}

double bh_elementwise(const Mesh& mesh, const CutTopology& cut, const MultiplierField& theta,
                      const ProblemData& data, int cell, int vertex, int side) {
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    const int e = mesh.cell_edges[cell][j];
    const Edge& ed = mesh.edges[e];
    if (ed.v0 != vertex && ed.v1 != vertex) continue;
    if (!cut.edge_in_Fh(e, side)) continue;
    const double s = mesh.chi_jump_sign(e, cell);
    sum += data.k(side) * ed.length * 0.5 * s * theta.at(mesh, side, e, vertex);
  }
  return sum;
}

}  // namespace cutflux
