#include "homstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "homstokes/error.hpp"

namespace homstokes {

Vec2 TriMesh::qp_point(std::size_t e, int q) const {
  const auto& b = reference_tables().bary[q];
  const auto& c = corners[e];
  return {b[0] * c[0].x + b[1] * c[1].x + b[2] * c[2].x, b[0] * c[0].y + b[1] * c[1].y + b[2] * c[2].y};
}

double TriMesh::qp_weight(std::size_t e, int q) const { return reference_tables().w[q] * area[e]; }

void TriMesh::p2_gradients(std::size_t e, int q, double out[6][2]) const {
  const auto& ref = reference_tables().dp2[q];
  const auto& m = jinvt[e];
  for (int a = 0; a < 6; ++a) {
    out[a][0] = m[0] * ref[a][0] + m[1] * ref[a][1];
    out[a][1] = m[2] * ref[a][0] + m[3] * ref[a][1];
  }
}

void TriMesh::p1_gradients(std::size_t e, double out[3][2]) const {
  const auto& ref = reference_tables().dp1;
  const auto& m = jinvt[e];
  for (int a = 0; a < 3; ++a) {
    out[a][0] = m[0] * ref[a][0] + m[1] * ref[a][1];
    out[a][1] = m[2] * ref[a][0] + m[3] * ref[a][1];
  }
}

double TriMesh::measure() const {
  double s = 0.0;
  for (double a : area) s += a;
  return s;
}

double TriMesh::max_diameter() const {
  double d = 0.0;
  for (const auto& c : corners) {
    d = std::max({d, length(c[1] - c[0]), length(c[2] - c[1]), length(c[0] - c[2])});
  }
  return d;
}

void TriMesh::finalize_geometry() {
  std::size_t ne = corners.size();
  area.resize(ne);
  jinvt.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& c = corners[e];
    double ax = c[1].x - c[0].x, ay = c[1].y - c[0].y;
    double bx = c[2].x - c[0].x, by = c[2].y - c[0].y;
    double det = ax * by - bx * ay;
    area[e] = 0.5 * det;
    jinvt[e] = {by / det, -ay / det, -bx / det, ax / det};
  }
  qp_w.resize(ne * kQp);
  const auto& w = reference_tables().w;
  for (std::size_t e = 0; e < ne; ++e) {
    for (int q = 0; q < kQp; ++q) qp_w[e * kQp + q] = w[q] * area[e];
  }
  if (lattice || ne == 0) return;

  Vec2 lo = corners[0][0], hi = corners[0][0];
  double diam = 0.0;
  for (const auto& c : corners) {
    for (const auto& p : c) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    diam = std::max({diam, length(c[1] - c[0]), length(c[2] - c[1]), length(c[0] - c[2])});
  }
  bucket_size_ = std::max(diam, std::max(hi.x - lo.x, hi.y - lo.y) / 1024.0);
  bucket_lo_ = lo;
  bucket_nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / bucket_size_)));
  bucket_ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / bucket_size_)));
  buckets_.assign(static_cast<std::size_t>(bucket_nx_) * bucket_ny_, {});
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& c = corners[e];
    double x0 = std::min({c[0].x, c[1].x, c[2].x}), x1 = std::max({c[0].x, c[1].x, c[2].x});
    double y0 = std::min({c[0].y, c[1].y, c[2].y}), y1 = std::max({c[0].y, c[1].y, c[2].y});
    int i0 = std::clamp(static_cast<int>(std::floor((x0 - lo.x) / bucket_size_)), 0, bucket_nx_ - 1);
    int i1 = std::clamp(static_cast<int>(std::floor((x1 - lo.x) / bucket_size_)), 0, bucket_nx_ - 1);
    int j0 = std::clamp(static_cast<int>(std::floor((y0 - lo.y) / bucket_size_)), 0, bucket_ny_ - 1);
    int j1 = std::clamp(static_cast<int>(std::floor((y1 - lo.y) / bucket_size_)), 0, bucket_ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[i + static_cast<std::size_t>(bucket_nx_) * j].push_back(static_cast<int>(e));
    }
  }
}

bool TriMesh::locate(Vec2 p, std::size_t& elem, double& l1, double& l2) const {
  auto bary = [&](std::size_t e) {
    const auto& m = jinvt[e];
    double dx = p.x - corners[e][0].x, dy = p.y - corners[e][0].y;
    l1 = m[0] * dx + m[2] * dy;
    l2 = m[1] * dx + m[3] * dy;
  };
  if (lattice) {
    const LatticeInfo& L = *lattice;
    if (L.periodic) {
      p.x -= std::floor(p.x);
      p.y -= std::floor(p.y);
    }
    double fx = (p.x - L.origin.x) / L.s, fy = (p.y - L.origin.y) / L.s;
    int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    const double tol = 1e-10;
    if (i == L.nx && fx <= L.nx + tol) i = L.nx - 1;
    if (j == L.ny && fy <= L.ny + tol) j = L.ny - 1;
    if (i < 0 && fx >= -tol) i = 0;
    if (j < 0 && fy >= -tol) j = 0;
    if (i < 0 || j < 0 || i >= L.nx || j >= L.ny) return false;
    int first = L.square_elem[i + static_cast<std::size_t>(L.nx) * j];
    if (first < 0) {
      // point on the edge of an inactive square may still belong to a neighbour
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= L.nx || jj >= L.ny) continue;
          int f = L.square_elem[ii + static_cast<std::size_t>(L.nx) * jj];
          if (f < 0) continue;
          for (int t = 0; t < 2; ++t) {
            bary(f + t);
            if (l1 >= -tol && l2 >= -tol && l1 + l2 <= 1.0 + tol) {
              elem = f + t;
              return true;
            }
          }
        }
      }
      return false;
    }
    double rx = fx - i, ry = fy - j;
    elem = static_cast<std::size_t>(first + (ry <= rx ? 0 : 1));
    bary(elem);
    return true;
  }
  if (buckets_.empty()) return false;
  int i = static_cast<int>(std::floor((p.x - bucket_lo_.x) / bucket_size_));
  int j = static_cast<int>(std::floor((p.y - bucket_lo_.y) / bucket_size_));
  i = std::clamp(i, 0, bucket_nx_ - 1);
  j = std::clamp(j, 0, bucket_ny_ - 1);
  std::size_t best = 0;
  double best_violation = std::numeric_limits<double>::infinity();
  for (int e : buckets_[i + static_cast<std::size_t>(bucket_nx_) * j]) {
    bary(e);
    double v = std::max({-l1, -l2, l1 + l2 - 1.0, 0.0});
    if (v < best_violation) {
      best_violation = v;
      best = static_cast<std::size_t>(e);
      if (v == 0.0) break;
    }
  }
  if (best_violation > 1e-10) return false;
  elem = best;
  bary(elem);
  return true;
}

namespace {

/// Fills a lattice-structured TriMesh. active(i, j) selects squares.
template <class Active>
void build_lattice(TriMesh& m, int nx, int ny, double s, Vec2 origin, bool periodic, Active active) {
  LatticeInfo L;
  L.nx = nx;
  L.ny = ny;
  L.s = s;
  L.origin = origin;
  L.periodic = periodic;
  L.square_elem.assign(static_cast<std::size_t>(nx) * ny, -1);

  long vx = periodic ? nx : nx + 1;
  long vy = periodic ? ny : ny + 1;
  auto wi = [&](long i) { return periodic ? ((i % nx) + nx) % nx : i; };
  auto wj = [&](long j) { return periodic ? ((j % ny) + ny) % ny : j; };
  long nv = vx * vy;
  long nh = nx * vy;
  long nvt = vx * ny;
  auto V = [&](long i, long j) { return wi(i) + vx * wj(j); };
  auto H = [&](long i, long j) { return nv + wi(i) + nx * wj(j); };
  auto Vt = [&](long i, long j) { return nv + nh + wi(i) + vx * wj(j); };
  auto D = [&](long i, long j) { return nv + nh + nvt + wi(i) + nx * wj(j); };
  long total = nv + nh + nvt + static_cast<long>(nx) * ny;

  std::vector<int> p2map(total, -1), p1map(nv, -1);
  int n2 = 0, n1 = 0;
  auto node_point = [&](long i2, long j2) {
    // doubled lattice coordinates of a P2 node
    Vec2 p{origin.x + 0.5 * s * i2, origin.y + 0.5 * s * j2};
    if (periodic) {
      p.x -= std::floor(p.x + 1e-13);
      p.y -= std::floor(p.y + 1e-13);
      if (p.x < 0) p.x = 0;
      if (p.y < 0) p.y = 0;
    }
    return p;
  };
  auto use2 = [&](long full, long i2, long j2) {
    if (p2map[full] < 0) {
      p2map[full] = n2++;
      m.p2_points.push_back(node_point(i2, j2));
    }
    return p2map[full];
  };
  auto use1 = [&](long full, long i, long j) {
    if (p1map[full] < 0) {
      p1map[full] = n1++;
      m.p1_points.push_back(node_point(2 * i, 2 * j));
    }
    return p1map[full];
  };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!active(i, j)) continue;
      L.square_elem[i + static_cast<std::size_t>(nx) * j] = static_cast<int>(m.corners.size());
      Vec2 c00{origin.x + s * i, origin.y + s * j};
      Vec2 c10{c00.x + s, c00.y}, c11{c00.x + s, c00.y + s}, c01{c00.x, c00.y + s};
      // lower
      m.corners.push_back({c00, c10, c11});
      m.p1_dofs.push_back({use1(V(i, j), i, j), use1(V(i + 1, j), i + 1, j), use1(V(i + 1, j + 1), i + 1, j + 1)});
      m.p2_dofs.push_back({use2(V(i, j), 2 * i, 2 * j), use2(V(i + 1, j), 2 * i + 2, 2 * j),
                           use2(V(i + 1, j + 1), 2 * i + 2, 2 * j + 2), use2(H(i, j), 2 * i + 1, 2 * j),
                           use2(Vt(i + 1, j), 2 * i + 2, 2 * j + 1), use2(D(i, j), 2 * i + 1, 2 * j + 1)});
      // upper
      m.corners.push_back({c00, c11, c01});
      m.p1_dofs.push_back({use1(V(i, j), i, j), use1(V(i + 1, j + 1), i + 1, j + 1), use1(V(i, j + 1), i, j + 1)});
      m.p2_dofs.push_back({use2(V(i, j), 2 * i, 2 * j), use2(V(i + 1, j + 1), 2 * i + 2, 2 * j + 2),
                           use2(V(i, j + 1), 2 * i, 2 * j + 2), use2(D(i, j), 2 * i + 1, 2 * j + 1),
                           use2(H(i, j + 1), 2 * i + 1, 2 * j + 2), use2(Vt(i, j), 2 * i, 2 * j + 1)});
    }
  }
  m.n_p1 = n1;
  m.n_p2 = n2;
  m.periodic = periodic;
  m.lattice = std::move(L);
  m.finalize_geometry();
}

/// Generic P2/P1 numbering from vertex coordinates and CCW triangles.
void build_from_triangles(TriMesh& m, const std::vector<Vec2>& verts, const std::vector<std::array<int, 3>>& tris) {
  std::map<std::pair<int, int>, int> edge_id;
  m.p1_points = verts;
  m.p2_points = verts;
  m.n_p1 = static_cast<int>(verts.size());
  int n2 = m.n_p1;
  for (const auto& t : tris) {
    std::array<int, 6> d{t[0], t[1], t[2], 0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      auto key = std::minmax(a, b);
      auto it = edge_id.find(key);
      if (it == edge_id.end()) {
        it = edge_id.emplace(key, n2++).first;
        m.p2_points.push_back((verts[a] + verts[b]) * 0.5);
      }
      d[3 + k] = it->second;
    }
    m.corners.push_back({verts[t[0]], verts[t[1]], verts[t[2]]});
    m.p1_dofs.push_back(t);
    m.p2_dofs.push_back(d);
  }
  m.n_p2 = n2;
  m.finalize_geometry();
}

bool point_in_triangle_strict(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  return cross(b - a, p - a) > 0 && cross(c - b, p - b) > 0 && cross(a - c, p - c) > 0;
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> tris;
  double scale = polygon_diameter(poly);
  while (idx.size() > 3) {
    bool clipped = false;
    std::size_t n = idx.size();
    for (std::size_t k = 0; k < n; ++k) {
      int ia = idx[(k + n - 1) % n], ib = idx[k], ic = idx[(k + 1) % n];
      Vec2 a = poly[ia], b = poly[ib], c = poly[ic];
      if (cross(b - a, c - b) <= 1e-14 * scale * scale) continue;
      bool empty = true;
      for (int other : idx) {
        if (other == ia || other == ib || other == ic) continue;
        if (point_in_triangle_strict(poly[other], a, b, c)) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<long>(k));
      clipped = true;
      break;
    }
    if (!clipped) throw Error(ErrorCode::invalid_domain, "polygon could not be triangulated");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

void refine_red(std::vector<Vec2>& verts, std::vector<std::array<int, 3>>& tris) {
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    int id = static_cast<int>(verts.size());
    verts.push_back((verts[a] + verts[b]) * 0.5);
    mid.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> out;
  out.reserve(tris.size() * 4);
  for (const auto& t : tris) {
    int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    out.push_back({t[0], ab, ca});
    out.push_back({ab, t[1], bc});
    out.push_back({ca, bc, t[2]});
    out.push_back({ab, bc, ca});
  }
  tris = std::move(out);
}

double max_tri_diameter(const std::vector<Vec2>& v, const std::vector<std::array<int, 3>>& tris) {
  double d = 0.0;
  for (const auto& t : tris) {
    d = std::max({d, length(v[t[1]] - v[t[0]]), length(v[t[2]] - v[t[1]]), length(v[t[0]] - v[t[2]])});
  }
  return d;
}

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-9; }

/// Lattice side s <= h such that all polygon vertices sit on lattice nodes,
/// or 0 when the polygon is not rectilinear with commensurate coordinates.
double lattice_spacing(const std::vector<Vec2>& poly, double h, Vec2& lo, int& nx, int& ny) {
  std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    if (a.x != b.x && a.y != b.y) return 0.0;
  }
  lo = poly[0];
  Vec2 hi = poly[0];
  for (const auto& p : poly) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  double w = hi.x - lo.x, ht = hi.y - lo.y;
  int n0 = std::max(1, static_cast<int>(std::ceil(w / h - 1e-9)));
  for (int N = n0; N <= 8 * n0 + 64; ++N) {
    double s = w / N;
    if (!near_integer(ht / s)) continue;
    bool ok = true;
    for (const auto& p : poly) {
      if (!near_integer((p.x - lo.x) / s) || !near_integer((p.y - lo.y) / s)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    nx = N;
    ny = static_cast<int>(std::lround(ht / s));
    return s;
  }
  return 0.0;
}

}  // namespace

std::shared_ptr<const UnitCellMesh> build_cell_mesh(int d, int n) {
  if (d != 2 && d != 3) throw Error(ErrorCode::invalid_resolution, "cell dimension must be 2 or 3");
  if (n < 2) throw Error(ErrorCode::invalid_resolution, "cell mesh needs n >= 2, got " + std::to_string(n));
  auto mesh = std::make_shared<UnitCellMesh>();
  mesh->d = d;
  mesh->n = n;
  if (d == 2) {
    build_lattice(*mesh, n, n, 1.0 / n, {0.0, 0.0}, true, [](int, int) { return true; });
    mesh->n_cells = static_cast<std::size_t>(n) * n;
    mesh->n_torus_vertices = static_cast<std::size_t>(mesh->n_p1);
    mesh->n_simplices = mesh->n_elements();
    mesh->simplex_measure_sum = mesh->measure();
    return mesh;
  }
  // d = 3: Kuhn subdivision of each cube into six tetrahedra on the torus
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  double hsz = 1.0 / n;
  double vol = 0.0;
  std::size_t tets = 0;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        for (const auto& pm : perms) {
          double v[4][3];
          int cur[3] = {0, 0, 0};
          for (int r = 0; r < 4; ++r) {
            if (r > 0) cur[pm[r - 1]] = 1;
            v[r][0] = (i + cur[0]) * hsz;
            v[r][1] = (j + cur[1]) * hsz;
            v[r][2] = (k + cur[2]) * hsz;
          }
          double a[3], b[3], c[3];
          for (int t = 0; t < 3; ++t) {
            a[t] = v[1][t] - v[0][t];
            b[t] = v[2][t] - v[0][t];
            c[t] = v[3][t] - v[0][t];
          }
          double det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                       a[2] * (b[0] * c[1] - b[1] * c[0]);
          vol += std::abs(det) / 6.0;
          ++tets;
        }
      }
    }
  }
  mesh->n_cells = static_cast<std::size_t>(n) * n * n;
  mesh->n_torus_vertices = mesh->n_cells;
  mesh->n_simplices = tets;
  mesh->simplex_measure_sum = vol;
  mesh->periodic = true;
  return mesh;
}

DomainSpec DomainSpec::unit_square() { return {"unit_square", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}}; }

DomainSpec DomainSpec::l_shape() {
  return {"l_shape", {{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}};
}

DomainSpec DomainSpec::from_preset(const std::string& name) {
  if (name == "unit_square" || name == "unit-square") return unit_square();
  if (name == "l_shape" || name == "L-shape" || name == "l-shape") return l_shape();
  throw Error(ErrorCode::invalid_domain, "unknown domain preset '" + name + "'");
}

std::shared_ptr<const DomainMesh> build_domain_mesh(const DomainSpec& spec, double h) {
  const auto& poly = spec.vertices;
  if (poly.size() < 3 || !polygon_is_simple(poly)) throw Error(ErrorCode::invalid_domain, "polygon is not simple");
  if (polygon_signed_area(poly) <= 0.0) {
    throw Error(ErrorCode::invalid_domain, "polygon must have positive area (counter-clockwise vertices)");
  }
  double diam = polygon_diameter(poly);
  if (!(h > 0.0) || h >= diam) {
    throw Error(ErrorCode::invalid_resolution, "mesh size must satisfy 0 < h < diameter");
  }
  auto mesh = std::make_shared<DomainMesh>();
  mesh->spec = spec;
  mesh->h_target = h;
  mesh->diameter = diam;

  Vec2 lo;
  int nx = 0, ny = 0;
  double s = lattice_spacing(poly, h, lo, nx, ny);
  if (s > 0.0) {
    build_lattice(*mesh, nx, ny, s, lo, false, [&](int i, int j) {
      Vec2 c{lo.x + (i + 0.5) * s, lo.y + (j + 0.5) * s};
      return point_in_polygon(poly, c);
    });
  } else {
    std::vector<Vec2> verts = poly;
    auto tris = ear_clip(poly);
    while (max_tri_diameter(verts, tris) > 2.0 * h) refine_red(verts, tris);
    build_from_triangles(*mesh, verts, tris);
  }

  // boundary facets: edges whose P2 midpoint dof belongs to a single element
  std::vector<int> use(mesh->n_p2, 0);
  for (const auto& d : mesh->p2_dofs) {
    for (int k = 3; k < 6; ++k) ++use[d[k]];
  }
  mesh->p2_on_boundary.assign(mesh->n_p2, 0);
  for (std::size_t e = 0; e < mesh->n_elements(); ++e) {
    const auto& d = mesh->p2_dofs[e];
    for (int k = 0; k < 3; ++k) {
      if (use[d[3 + k]] != 1) continue;
      BoundaryFacet f;
      f.elem = e;
      int a = k, b = (k + 1) % 3;
      f.p2 = {d[a], d[b], d[3 + k]};
      f.a = mesh->corners[e][a];
      f.b = mesh->corners[e][b];
      Vec2 t = f.b - f.a;
      f.length = length(t);
      f.normal = {t.y / f.length, -t.x / f.length};
      for (int dof : f.p2) mesh->p2_on_boundary[dof] = 1;
      mesh->facets.push_back(f);
    }
  }
  for (int i = 0; i < mesh->n_p2; ++i) {
    if (mesh->p2_on_boundary[i]) mesh->boundary_p2.push_back(i);
  }

  mesh->qp_delta.resize(mesh->n_qp());
  double inr = 0.0;
  for (std::size_t e = 0; e < mesh->n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      double dlt = polygon_boundary_distance(poly, mesh->qp_point(e, q));
      mesh->qp_delta[e * kQp + q] = dlt;
      inr = std::max(inr, dlt);
    }
  }
  for (const auto& p : mesh->p2_points) inr = std::max(inr, polygon_boundary_distance(poly, p));
  mesh->inradius = inr;
  return mesh;
}

}  // namespace homstokes
