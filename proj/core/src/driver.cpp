#include "cutflux/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cutflux/flux.hpp"
#include "cutflux/linalg.hpp"
#include "cutflux/multiplier.hpp"
#include "cutflux/spaces.hpp"
#include "cutflux/vtk.hpp"

namespace cutflux {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_exact_solution(const ExactSolution& ex) {
  std::mt19937 rng(20240517);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Source term against a central-difference Laplacian. The stencil loses
  // |u| eps / h^2 to cancellation, amplified by k, so that floor is added to
  // the 1e-4 relative tolerance.
  const double h = 1e-5;
  for (int side = 1; side <= 2; ++side) {
    const double k = side == 1 ? ex.k1 : ex.k2;
    for (int s = 0; s < 100; ++s) {
      const Vec2 p = ex.sample_point(unit(rng), side);
      const double lap = (ex.u(p + Vec2(h, 0), side) + ex.u(p - Vec2(h, 0), side) +
                          ex.u(p + Vec2(0, h), side) + ex.u(p - Vec2(0, h), side) -
                          4.0 * ex.u(p, side)) /
                         (h * h);
      const double f_ref = -k * lap;
      const double f_val = ex.f(p, side);
      const double noise =
          32.0 * k * 2.2e-16 * std::max(1.0, std::abs(ex.u(p, side))) / (h * h);
      if (std::abs(f_val - f_ref) > 1e-4 * (1.0 + std::abs(f_val)) + noise)
        throw std::runtime_error(ex.name + ": source term disagrees with FD Laplacian");
    }
  }

  // Interface identities at sampled points of the zero set.
  for (int s = 0; s < 100; ++s) {
    const Vec2 p = ex.interface_point(unit(rng));
    if (std::abs(ex.phi(p)) > 1e-8)
      throw std::runtime_error(ex.name + ": interface sampler off the zero set");
    const double ju = ex.u(p, 1) - ex.u(p, 2);
    if (std::abs(ju) > 1e-8)
      throw std::runtime_error(ex.name + ": solution jump at the interface");
    const Vec2 n = ex.grad_phi(p).normalized();
    const double jflux = (ex.k1 * ex.grad_u(p, 1) - ex.k2 * ex.grad_u(p, 2)).dot(n);
    const double g = ex.g ? ex.g(p) : 0.0;
    if (std::abs(jflux - g) > 1e-8)
      throw std::runtime_error(ex.name + ": flux jump at the interface does not match g");
  }
}

ExactSolution make_ellipse(double mu) {
  ExactSolution ex;
  ex.name = "ellipse";
  ex.k1 = 1.0;
  ex.k2 = mu;
  const double a = kPi / 6.18;
  const double b = 1.5 * a;
  const double p = 5.0;

  auto s_of = [a, b](const Vec2& x) {
    return x.x() * x.x() / (a * a) + x.y() * x.y() / (b * b);
  };
  ex.phi = LevelSet{[s_of](const Vec2& x) { return s_of(x) - 1.0; }};
  ex.grad_phi = [a, b](const Vec2& x) {
    return Vec2(2.0 * x.x() / (a * a), 2.0 * x.y() / (b * b));
  };
  ex.u = [s_of, p, k1 = ex.k1, k2 = ex.k2](const Vec2& x, int side) {
    const double rho_p = std::pow(s_of(x), p / 2.0);
    return side == 1 ? rho_p / k1 : rho_p / k2 + 1.0 / k1 - 1.0 / k2;
  };
  ex.grad_u = [s_of, a, b, p, k1 = ex.k1, k2 = ex.k2](const Vec2& x, int side) {
    const double k = side == 1 ? k1 : k2;
    const double sp = std::pow(s_of(x), p / 2.0 - 1.0);
    return Vec2(p / k * sp * x.x() / (a * a), p / k * sp * x.y() / (b * b));
  };
  ex.f = [s_of, a, b, p](const Vec2& x, int) {
    const double s = s_of(x);
    const double t1 = p * (p - 2.0) * std::pow(s, p / 2.0 - 2.0) *
                      (x.x() * x.x() / (a * a * a * a) + x.y() * x.y() / (b * b * b * b));
    const double t2 = p * std::pow(s, p / 2.0 - 1.0) * (1.0 / (a * a) + 1.0 / (b * b));
    return -(t1 + t2);
  };
  ex.interface_point = [a, b](double t) {
    return Vec2(a * std::cos(2.0 * kPi * t), b * std::sin(2.0 * kPi * t));
  };
  ex.sample_point = [a, b](double t, int side) {
    const double ang = 977.0 * t;
    const double rho = side == 1 ? 0.2 + 0.6 * t : 1.2 + 0.6 * t;
    return Vec2(a * rho * std::cos(ang), b * rho * std::sin(ang));
  };
  return ex;
}

ExactSolution make_lshape(double mu) {
  ExactSolution ex;
  ex.name = "lshape";
  ex.k1 = 1.0;
  ex.k2 = mu;
  ex.domain = Domain::LShape;
  ex.dom_a = -5.0;
  ex.dom_b = 5.0;
  ex.n0_factor = 2;  // n0 counts subdivisions per quadrant block

  const double rho0 = 2.0 * std::sqrt(2.0);
  const double c = 2.0 / 3.0;
  const double A = std::pow(rho0, c);
  const double B = 2.0 / (3.0 * mu) * std::pow(rho0, -1.0 / 3.0);

  auto polar = [](const Vec2& x) {
    double th = std::atan2(x.y(), x.x());
    if (th < 0.0) th += 2.0 * kPi;  // branch cut on the positive x-axis
    return std::pair<double, double>(x.norm(), th);
  };

  ex.phi = LevelSet{[rho0](const Vec2& x) { return x.squaredNorm() - rho0 * rho0; }};
  ex.grad_phi = [](const Vec2& x) { return Vec2(2.0 * x.x(), 2.0 * x.y()); };
  ex.u = [polar, c, A, B, rho0](const Vec2& x, int side) {
    const auto [rho, th] = polar(x);
    if (side == 1) return std::pow(rho, c) * std::sin(c * th);
    return (A + B * (rho - rho0)) * std::sin(c * th);
  };
  ex.grad_u = [polar, c, A, B, rho0](const Vec2& x, int side) -> Vec2 {
    const auto [rho, th] = polar(x);
    const Vec2 e_rho(std::cos(th), std::sin(th));
    const Vec2 e_th(-std::sin(th), std::cos(th));
    if (side == 1)
      return c * std::pow(rho, c - 1.0) * (std::sin(c * th) * e_rho + std::cos(c * th) * e_th);
    return B * std::sin(c * th) * e_rho +
           c / rho * (A + B * (rho - rho0)) * std::cos(c * th) * e_th;
  };
  ex.f = [polar, c, A, B, rho0, mu](const Vec2& x, int side) {
    if (side == 1) return 0.0;  // the inner solution is harmonic
    const auto [rho, th] = polar(x);
    return -mu * (B / rho - c * c / (rho * rho) * (A + B * (rho - rho0))) * std::sin(c * th);
  };
  ex.interface_point = [rho0](double t) {
    const double th = 0.05 + t * (1.5 * kPi - 0.1);
    return Vec2(rho0 * std::cos(th), rho0 * std::sin(th));
  };
  ex.sample_point = [rho0](double t, int side) {
    const double th = 0.15 + std::fmod(977.0 * t, 1.0) * (1.5 * kPi - 0.3);
    const double rho = side == 1 ? rho0 * (0.2 + 0.6 * t) : rho0 * (1.15 + 0.4 * t);
    return Vec2(rho * std::cos(th), rho * std::sin(th));
  };
  return ex;
}

ExactSolution make_petal(double mu) {
  ExactSolution ex;
  ex.name = "petal";
  ex.k1 = 1.0;
  ex.k2 = mu;

  auto hfun = [](double alpha) { return 1.0 + 0.5 * std::sin(12.0 * alpha); };
  auto phi_fun = [hfun](const Vec2& x) {
    const double r2 = x.squaredNorm();
    const double alpha = std::atan2(x.y(), x.x());
    return r2 * r2 * hfun(alpha) - 0.3;
  };
  ex.phi = LevelSet{phi_fun};
  ex.grad_phi = [hfun](const Vec2& x) {
    const double r2 = x.squaredNorm();
    const double alpha = std::atan2(x.y(), x.x());
    const double ca = std::cos(12.0 * alpha);
    return Vec2(r2 * (4.0 * x.x() * hfun(alpha) - 6.0 * x.y() * ca),
                r2 * (4.0 * x.y() * hfun(alpha) + 6.0 * x.x() * ca));
  };
  ex.u = [phi_fun, mu](const Vec2& x, int side) {
    return side == 1 ? phi_fun(x) : phi_fun(x) / mu;
  };
  ex.grad_u = [grad_phi = ex.grad_phi, mu](const Vec2& x, int side) {
    const Vec2 g = grad_phi(x);
    return side == 1 ? g : Vec2(g / mu);
  };
  // K grad u = grad phi on both sides, so f = -lap(phi) everywhere.
  ex.f = [](const Vec2& x, int) {
    const double r2 = x.squaredNorm();
    const double alpha = std::atan2(x.y(), x.x());
    return r2 * (64.0 * std::sin(12.0 * alpha) - 16.0);
  };
  ex.interface_point = [hfun](double t) {
    const double alpha = 2.0 * kPi * t;
    const double r = std::pow(0.3 / hfun(alpha), 0.25);
    return Vec2(r * std::cos(alpha), r * std::sin(alpha));
  };
  ex.sample_point = [](double t, int side) {
    const double ang = 977.0 * t;
    const double r = side == 1 ? 0.1 + 0.5 * t : 0.95 + 0.3 * t;
    return Vec2(r * std::cos(ang), r * std::sin(ang));
  };
  return ex;
}

ExactSolution make_linear_patch() {
  ExactSolution ex = make_ellipse(1.0);
  ex.name = "linear-patch";
  ex.k1 = ex.k2 = 1.0;
  ex.u = [](const Vec2& x, int) { return x.x() + x.y(); };
  ex.grad_u = [](const Vec2&, int) { return Vec2(1.0, 1.0); };
  ex.f = [](const Vec2&, int) { return 0.0; };
  return ex;
}

ExactSolution make_manufactured_g() {
  ExactSolution ex;
  ex.name = "manufactured-g";
  ex.k1 = ex.k2 = 1.0;
  const double a = kPi / 6.18;
  const double b = 1.5 * a;

  auto s_of = [a, b](const Vec2& x) {
    return x.x() * x.x() / (a * a) + x.y() * x.y() / (b * b);
  };
  ex.phi = LevelSet{[s_of](const Vec2& x) { return s_of(x) - 1.0; }};
  ex.grad_phi = [a, b](const Vec2& x) {
    return Vec2(2.0 * x.x() / (a * a), 2.0 * x.y() / (b * b));
  };
  // u1 = s, u2 = 2s - 1: continuous across s = 1 with a flux jump
  // [K grad u . n] = -|grad s| there.
  ex.u = [s_of](const Vec2& x, int side) {
    return side == 1 ? s_of(x) : 2.0 * s_of(x) - 1.0;
  };
  ex.grad_u = [grad_phi = ex.grad_phi](const Vec2& x, int side) {
    const Vec2 g = grad_phi(x);
    return side == 1 ? g : Vec2(2.0 * g);
  };
  ex.f = [a, b](const Vec2&, int side) {
    const double base = -(2.0 / (a * a) + 2.0 / (b * b));
    return side == 1 ? base : 2.0 * base;
  };
  ex.g = [a, b](const Vec2& x) {
    return -2.0 * std::sqrt(x.x() * x.x() / (a * a * a * a) + x.y() * x.y() / (b * b * b * b));
  };
  ex.interface_point = [a, b](double t) {
    return Vec2(a * std::cos(2.0 * kPi * t), b * std::sin(2.0 * kPi * t));
  };
  ex.sample_point = [a, b](double t, int side) {
    const double ang = 977.0 * t;
    const double rho = side == 1 ? 0.2 + 0.6 * t : 1.2 + 0.6 * t;
    return Vec2(a * rho * std::cos(ang), b * rho * std::sin(ang));
  };
  return ex;
}

}  // namespace

ExactSolution make_example(const std::string& name, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("make_example: mu must be positive");
  ExactSolution ex;
  if (name == "ellipse")
    ex = make_ellipse(mu);
  else if (name == "lshape")
    ex = make_lshape(mu);
  else if (name == "petal")
    ex = make_petal(mu);
  else if (name == "linear-patch")
    ex = make_linear_patch();
  else if (name == "manufactured-g")
    ex = make_manufactured_g();
  else
    throw std::invalid_argument("make_example: unknown example '" + name + "'");
  validate_exact_solution(ex);
  return ex;
}

ExperimentSpec manufactured_g_case() {
  ExperimentSpec spec;
  spec.example = "manufactured-g";
  spec.mu = 1.0;
  spec.mode = RefinementMode::Uniform;
  spec.max_dofs = 3000;
  return spec;
}

double ConvergenceTable::slope(const std::function<double(const IterationRow&)>& value,
                               int window) const {
  const int n = static_cast<int>(rows.size());
  const int use = std::min(window, n);
  if (use < 2) throw std::invalid_argument("slope: need at least two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - use; i < n; ++i) {
    const double x = std::log(static_cast<double>(rows[i].n_dofs));
    const double y = std::log(value(rows[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (use * sxy - sx * sy) / (use * sxx - sx * sx);
}

std::string ConvergenceTable::csv() const {
  std::ostringstream out;
  out << "iter,N,energy_error,flux_error,eta,eta_gamma,eps,effectivity,"
         "max_conservation_defect\n";
  char buf[512];
  for (const IterationRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.n_dofs,
                  r.energy_error, r.flux_error, r.eta, r.eta_gamma, r.osc, r.effectivity,
                  r.max_conservation_defect);
    out << buf;
  }
  return out.str();
}

namespace {

void dump_vtk(const std::string& dir, int iter, const Mesh& mesh, const CutTopology& cut,
              const PrimalField& u, const ReconstructedFlux& flux, const EstimatorReport& est) {
  VtkCellFields fields;
  std::vector<double> cls(mesh.n_cells()), u1(mesh.n_cells()), u2(mesh.n_cells());
  std::vector<Vec2> sigma(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    cls[c] = cut.is_cut(c) ? 0.0 : (cut.cell_class[c] == CellClass::Inside1 ? -1.0 : 1.0);
    const Vec2 xc = mesh.centroid(c);
    u1[c] = cut.cell_in_side(c, 1) ? u.eval(c, 1, xc) : 0.0;
    u2[c] = cut.cell_in_side(c, 2) ? u.eval(c, 2, xc) : 0.0;
    int side = cut.cell_in_side(c, 1) ? 1 : 2;
    if (cut.is_cut(c)) {
      // centroid side decided by the level set sign
      side = cut.geom(c).n_gamma.dot(xc - cut.geom(c).x_gamma) < 0.0 ? 1 : 2;
    }
    sigma[c] = eval_flux(mesh, cut, flux, c, side, xc);
  }
  fields.scalars.emplace_back("classification", std::move(cls));
  fields.scalars.emplace_back("eta_T", est.eta_cell);
  fields.scalars.emplace_back("u_h1", std::move(u1));
  fields.scalars.emplace_back("u_h2", std::move(u2));
  fields.vectors.emplace_back("flux", std::move(sigma));

  char name[64];
  std::snprintf(name, sizeof(name), "iter_%03d.vtk", iter);
  write_vtk(dir + "/" + name, mesh, fields);
}

}  // namespace

ConvergenceTable run_experiment(const ExperimentSpec& spec) {
  if (spec.max_dofs <= 0) throw std::invalid_argument("run_experiment: max_dofs must be positive");
  if (!(spec.theta_mark > 0.0) || spec.theta_mark > 1.0)
    throw std::invalid_argument("run_experiment: theta_mark must lie in (0,1]");

  const ExactSolution ex = make_example(spec.example, spec.mu);

  ProblemData data;
  data.k1 = ex.k1;
  data.k2 = ex.k2;
  data.gamma = spec.gamma;
  data.gamma_g = spec.gamma_g;
  data.f = ex.f;
  data.g = ex.g;
  data.dirichlet = ex.u;

  const ExactFields exact{ex.u, ex.grad_u};

  if (!spec.out_dir.empty()) std::filesystem::create_directories(spec.out_dir);

  // The patch-local multiplier construction requires every node's subdomain
  // fan to be edge-connected; refine any fan the interface weaves through.
  Mesh mesh = resolve_pinched_fans(
      build_structured_mesh(ex.domain, ex.dom_a, ex.dom_b, ex.n0_factor * spec.n0), ex.phi);
  ConvergenceTable table;

  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    const CutTopology cut = classify(mesh, ex.phi);
    const ChDofMap dofmap = build_ch_dofmap(mesh, cut);

    const LinearSystem sys = assemble_system(mesh, cut, data, dofmap);
    PrimalField u;
    u.mesh = &mesh;
    u.cut = &cut;
    u.dofmap = &dofmap;
    u.coeff = solve_sparse_spd(sys.A, sys.b);

    const ResidualTable rtable = assemble_residual_table(u, data);
    const MultiplierField theta = assemble_theta(u, data, rtable);
    const ReconstructedFlux flux = reconstruct_flux(u, data, theta);

    // Hard per-iteration checks: these identities are exact in exact
    // arithmetic, so violations indicate an assembly or sign bug. The
    // absolute floor covers problems whose residuals sit at rounding level
    // (the patch solves cannot cancel below machine dust).
    const double mixed = mixed_identity_defect(u, data, theta, rtable);
    if (mixed > 1e-10 * rtable.scale + 10.0 * rtable.noise)
      throw std::runtime_error("run_experiment: mixed identity violated, defect " +
                               std::to_string(mixed) + " vs scale " +
                               std::to_string(rtable.scale));
    const ConservationReport cons = check_conservation(mesh, cut, data, flux);
    if (cons.max_defect > 1e-10 * cons.scale)
      throw std::runtime_error("run_experiment: conservation violated, defect " +
                               std::to_string(cons.max_defect / cons.scale));
    const IrtStructureReport irt = check_irt_structure(mesh, cut, data, flux);
    if (std::max({irt.normal_jump, irt.tangential_jump, irt.divergence_mismatch,
                  irt.mean_edge_jump}) > 1e-10)
      throw std::runtime_error("run_experiment: immersed flux structure violated");

    const EstimatorReport est = compute_estimators(u, data, flux);

    IterationRow row;
    row.iter = iter;
    row.n_dofs = dofmap.n_dofs;
    row.energy_error = energy_error(u, data, exact);
    row.flux_error = flux_error(u, data, flux, exact);
    row.eta = est.eta;
    row.eta_gamma = est.eta_gamma;
    row.osc = est.osc;
    row.effectivity = row.energy_error > 0.0 ? est.eta / row.energy_error : 0.0;
    row.max_conservation_defect = cons.max_defect;
    row.conservation_scale = cons.scale;

    if (!spec.out_dir.empty() && spec.write_vtk)
      dump_vtk(spec.out_dir, iter, mesh, cut, u, flux, est);

    if (dofmap.n_dofs >= spec.max_dofs || iter + 1 == spec.max_iterations) {
      table.rows.push_back(row);
      break;
    }

    std::vector<int> marked;
    if (spec.mode == RefinementMode::Uniform) {
      marked.resize(mesh.n_cells());
      std::iota(marked.begin(), marked.end(), 0);
    } else {
      marked = dorfler_mark(est.eta_cell, spec.theta_mark);
    }

    // Fraction of marked cells that are cut or share a vertex with a cut cell.
    int near = 0;
    for (int c : marked) {
      bool near_cut = cut.is_cut(c);
      for (int j = 0; j < 3 && !near_cut; ++j)
        for (int cc : mesh.vertex_cells[mesh.cells[c][j]])
          if (cut.is_cut(cc)) {
            near_cut = true;
            break;
          }
      if (near_cut) ++near;
    }
    row.marked_cells = static_cast<int>(marked.size());
    row.marked_near_interface_fraction =
        marked.empty() ? 0.0 : static_cast<double>(near) / marked.size();
    table.rows.push_back(row);

    mesh = resolve_pinched_fans(refine(mesh, marked), ex.phi);
  }

  if (!spec.out_dir.empty()) {
    std::ofstream out(spec.out_dir + "/convergence.csv");
    out << table.csv();
  }
  return table;
}

}  // namespace cutflux
