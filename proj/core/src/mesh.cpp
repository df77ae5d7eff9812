#include "cutflux/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace cutflux {

namespace {

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

// Builds edges, adjacency and per-cell geometry from vertices + cells.
Mesh finalize_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells,
                   std::vector<int> parents) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);
  m.parent = std::move(parents);

  const int nc = m.n_cells();
  m.cell_area.resize(nc);
  m.cell_diameter.resize(nc);
  m.cell_edges.assign(nc, {-1, -1, -1});
  m.vertex_cells.assign(m.vertices.size(), {});

  std::unordered_map<uint64_t, int> edge_of;
  edge_of.reserve(3 * nc);

  for (int c = 0; c < nc; ++c) {
    const auto& [i0, i1, i2] = m.cells[c];
    const Vec2 &p0 = m.vertices[i0], &p1 = m.vertices[i1], &p2 = m.vertices[i2];
    const double area = signed_area(p0, p1, p2);
    if (!(area > 0.0)) throw std::runtime_error("finalize_mesh: cell with non-positive area");
    m.cell_area[c] = area;
    m.cell_diameter[c] =
        std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});

    for (int j = 0; j < 3; ++j) {
      m.vertex_cells[m.cells[c][j]].push_back(c);
      // Edge j is opposite local vertex j.
      const int a = m.cells[c][(j + 1) % 3];
      const int b = m.cells[c][(j + 2) % 3];
      const uint64_t key = edge_key(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        Edge e;
        e.v0 = std::min(a, b);
        e.v1 = std::max(a, b);
        e.cell_minus = c;
        m.edges.push_back(e);
        edge_of.emplace(key, m.n_edges() - 1);
        m.cell_edges[c][j] = m.n_edges() - 1;
      } else {
        Edge& e = m.edges[it->second];
        if (e.cell_plus >= 0)
          throw std::runtime_error("finalize_mesh: edge shared by more than two cells");
        e.cell_plus = c;
        m.cell_edges[c][j] = it->second;
      }
    }
  }

  // T^- gets the lower cell index so that normals are deterministic.
  for (Edge& e : m.edges) {
    if (!e.boundary() && e.cell_minus > e.cell_plus) std::swap(e.cell_minus, e.cell_plus);
    const Vec2 d = m.vertices[e.v1] - m.vertices[e.v0];
    e.length = d.norm();
    Vec2 n = rot_cw(d / e.length);
    const Vec2 cm = (m.vertices[m.cells[e.cell_minus][0]] +
                     m.vertices[m.cells[e.cell_minus][1]] +
                     m.vertices[m.cells[e.cell_minus][2]]) / 3.0;
    const Vec2 mid = 0.5 * (m.vertices[e.v0] + m.vertices[e.v1]);
    // Point away from T^- (into T^+ or out of the domain).
    if (n.dot(mid - cm) < 0.0) n = -n;
    e.normal = n;
  }

  m.vertex_on_boundary.assign(m.vertices.size(), 0);
  for (const Edge& e : m.edges)
    if (e.boundary()) {
      m.vertex_on_boundary[e.v0] = 1;
      m.vertex_on_boundary[e.v1] = 1;
    }

  return m;
}

}  // namespace

Vec2 Mesh::centroid(int cell) const {
  const auto& [a, b, c] = cells[cell];
  return (vertices[a] + vertices[b] + vertices[c]) / 3.0;
}

int Mesh::chi_jump_sign(int e, int cell) const {
  const Edge& ed = edges[e];
  if (ed.cell_minus == cell) return 1;
  if (ed.cell_plus == cell) return -1;
  throw std::invalid_argument("chi_jump_sign: cell not adjacent to edge");
}

Vec2 Mesh::outward_normal(int e, int cell) const {
  return static_cast<double>(chi_jump_sign(e, cell)) * edges[e].normal;
}

int Mesh::local_vertex(int cell, int vertex) const {
  for (int j = 0; j < 3; ++j)
    if (cells[cell][j] == vertex) return j;
  return -1;
}

int Mesh::edge_between(int a, int b) const {
  for (int c : vertex_cells[a])
    for (int j = 0; j < 3; ++j) {
      const Edge& e = edges[cell_edges[c][j]];
      if ((e.v0 == std::min(a, b)) && (e.v1 == std::max(a, b))) return cell_edges[c][j];
    }
  return -1;
}

Mesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells) {
  std::vector<int> parents(cells.size());
  std::iota(parents.begin(), parents.end(), 0);
  return finalize_mesh(std::move(vertices), std::move(cells), std::move(parents));
}

Mesh build_structured_mesh(Domain domain, double a, double b, int n) {
  if (n < 1) throw std::invalid_argument("build_structured_mesh: n must be >= 1");
  if (!(b > a)) throw std::invalid_argument("build_structured_mesh: requires b > a");
  if (domain == Domain::LShape && n % 2 != 0)
    throw std::invalid_argument("build_structured_mesh: LShape requires even n");

  const double h = (b - a) / n;
  const double mid = 0.5 * (a + b);

  std::vector<int> vid((n + 1) * (n + 1), -1);
  auto grid = [&](int i, int j) { return j * (n + 1) + i; };

  auto keep_square = [&](int i, int j) {
    if (domain == Domain::Square) return true;
    // LShape drops the quadrant [mid,b] x [a,mid].
    const double cx = a + (i + 0.5) * h;
    const double cy = a + (j + 0.5) * h;
    return !(cx > mid && cy < mid);
  };

  std::vector<Vec2> verts;
  std::vector<std::array<int, 3>> cells;
  auto vertex_id = [&](int i, int j) {
    int& id = vid[grid(i, j)];
    if (id < 0) {
      id = static_cast<int>(verts.size());
      verts.emplace_back(a + i * h, a + j * h);
    }
    return id;
  };

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!keep_square(i, j)) continue;
      const int v00 = vertex_id(i, j);
      const int v10 = vertex_id(i + 1, j);
      const int v01 = vertex_id(i, j + 1);
      const int v11 = vertex_id(i + 1, j + 1);
      // The diagonal v00-v11 is the longest edge of both triangles; storing
      // the opposite vertex first makes it the refinement edge.
      cells.push_back({v10, v11, v00});
      cells.push_back({v01, v00, v11});
    }

  std::vector<int> parents(cells.size());
  std::iota(parents.begin(), parents.end(), 0);
  return finalize_mesh(std::move(verts), std::move(cells), std::move(parents));
}

namespace {

struct WorkCell {
  std::array<int, 3> v;  // CCW, peak first
  int root;              // ancestor cell in the input mesh
};

class Bisector {
 public:
  Bisector(const Mesh& mesh)
      : verts_(mesh.vertices) {
    cells_.reserve(2 * mesh.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) cells_.push_back({mesh.cells[c], c});
    for (int c = 0; c < mesh.n_cells(); ++c)
      for (int j = 0; j < 3; ++j)
        attach(edge_key(cells_[c].v[(j + 1) % 3], cells_[c].v[(j + 2) % 3]), c);
  }

  void bisect_conforming(int c, int depth = 0) {
    if (depth > static_cast<int>(cells_.size()) + 8)
      throw std::runtime_error("refine: bisection recursion failed to terminate");
    const int a = cells_[c].v[1], b = cells_[c].v[2];
    int nb = neighbor(edge_key(a, b), c);
    if (nb >= 0 && !has_refinement_edge(nb, a, b)) {
      bisect_conforming(nb, depth + 1);
      nb = neighbor(edge_key(a, b), c);
      if (nb >= 0 && !has_refinement_edge(nb, a, b))
        throw std::runtime_error("refine: neighbor still incompatible after closure");
    }
    // Both cells sharing the split edge are bisected together, so no
    // hanging node can appear.
    const int m = static_cast<int>(verts_.size());
    verts_.push_back(0.5 * (verts_[a] + verts_[b]));
    split(c, m);
    if (nb >= 0) split(nb, m);
  }

  // Has cell `slot` still the original vertices of the input mesh (never split)?
  bool is_original(int slot, const Mesh& mesh) const {
    return cells_[slot].v == mesh.cells[slot] && cells_[slot].root == slot;
  }

  Mesh finish() {
    std::vector<std::array<int, 3>> out_cells;
    std::vector<int> out_parents;
    out_cells.reserve(cells_.size());
    out_parents.reserve(cells_.size());
    for (const WorkCell& wc : cells_) {
      out_cells.push_back(wc.v);
      out_parents.push_back(wc.root);
    }
    return finalize_mesh(std::move(verts_), std::move(out_cells), std::move(out_parents));
  }

 private:
  void attach(uint64_t key, int cell) {
    auto [it, inserted] = touching_.try_emplace(key, std::array<int, 2>{-1, -1});
    auto& slots = it->second;
    if (slots[0] == cell || slots[1] == cell) return;
    if (slots[0] < 0) slots[0] = cell;
    else if (slots[1] < 0) slots[1] = cell;
    else throw std::runtime_error("refine: edge shared by more than two cells");
  }

  void detach(uint64_t key, int cell) {
    auto it = touching_.find(key);
    if (it == touching_.end()) return;
    if (it->second[0] == cell) it->second[0] = -1;
    if (it->second[1] == cell) it->second[1] = -1;
  }

  int neighbor(uint64_t key, int cell) const {
    auto it = touching_.find(key);
    if (it == touching_.end()) return -1;
    if (it->second[0] == cell) return it->second[1];
    if (it->second[1] == cell) return it->second[0];
    return -1;
  }

  bool has_refinement_edge(int c, int a, int b) const {
    return edge_key(cells_[c].v[1], cells_[c].v[2]) == edge_key(a, b);
  }

  // Replace cell c = (v0,v1,v2) by its two bisection children
  // (m,v0,v1) and (m,v2,v0), where m is the midpoint of the edge (v1,v2).
  void split(int c, int m) {
    const auto [v0, v1, v2] = cells_[c].v;
    detach(edge_key(v0, v1), c);
    detach(edge_key(v1, v2), c);
    detach(edge_key(v2, v0), c);

    const int ca = c;  // reuse the slot
    cells_[ca] = {{m, v0, v1}, cells_[c].root};
    const int cb = static_cast<int>(cells_.size());
    cells_.push_back({{m, v2, v0}, cells_[ca].root});

    attach(edge_key(m, v0), ca);
    attach(edge_key(v0, v1), ca);
    attach(edge_key(v1, m), ca);
    attach(edge_key(m, v2), cb);
    attach(edge_key(v2, v0), cb);
    attach(edge_key(v0, m), cb);
  }

  std::vector<Vec2> verts_;
  std::vector<WorkCell> cells_;
  std::unordered_map<uint64_t, std::array<int, 2>> touching_{};
};

}  // namespace

Mesh refine(const Mesh& mesh, const std::vector<int>& marked) {
  for (int c : marked)
    if (c < 0 || c >= mesh.n_cells())
      throw std::invalid_argument("refine: marked cell out of range");

  if (marked.empty()) {
    Mesh copy = mesh;
    copy.parent.resize(copy.cells.size());
    std::iota(copy.parent.begin(), copy.parent.end(), 0);
    return copy;
  }

  Bisector bis(mesh);
  std::vector<int> order(marked);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (int c : order) {
    // Skip cells already bisected through closure; their slot now holds a child.
    if (bis.is_original(c, mesh)) bis.bisect_conforming(c);
  }
  return bis.finish();
}

std::vector<int> dorfler_mark(const std::vector<double>& indicators, double theta) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("dorfler_mark: theta must lie in (0,1]");
  double total = 0.0;
  for (double v : indicators) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("dorfler_mark: indicators must be finite and nonnegative");
    total += v * v;
  }
  if (total == 0.0) return {};

  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicators[a] != indicators[b]) return indicators[a] > indicators[b];
    return a < b;
  });

  const double target = theta * total;
  std::vector<int> picked;
  double acc = 0.0;
  for (int c : order) {
    if (indicators[c] == 0.0) break;
    picked.push_back(c);
    acc += indicators[c] * indicators[c];
    if (acc >= target) break;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace cutflux
