#include "bionet/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bionet::geom {

Point rotate_about(Point p, Point pivot, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double dx = p.x - pivot.x;
  const double dy = p.y - pivot.y;
  return {pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy};
}

LevelSet LevelSet::circle(Point center, double radius) {
  LevelSet ls;
  ls.two_circles_ = false;
  ls.c1_ = center;
  ls.radius_ = radius;
  ls.name_ = "circle";
  return ls;
}

LevelSet LevelSet::leaf(Point center1, Point center2, double radius) {
  LevelSet ls;
  ls.two_circles_ = true;
  ls.c1_ = center1;
  ls.c2_ = center2;
  ls.radius_ = radius;
  ls.name_ = "leaf";
  return ls;
}

LevelSet LevelSet::rotated_leaf(Point center1, Point center2, double radius,
                                double theta) {
  // Rotating around the square center keeps the domain inside [0,1]^2;
  // theta = 0 reproduces the plain leaf exactly (cos 0 = 1, sin 0 = 0).
  const Point pivot{0.5, 0.5};
  LevelSet ls = leaf(rotate_about(center1, pivot, theta),
                     rotate_about(center2, pivot, theta), radius);
  ls.theta_ = theta;
  ls.name_ = "rotated_leaf";
  return ls;
}

double LevelSet::operator()(double x, double y) const {
  const double p1 = std::hypot(x - c1_.x, y - c1_.y) - radius_;
  if (!two_circles_) return p1;
  const double p2 = std::hypot(x - c2_.x, y - c2_.y) - radius_;
  return std::max(p1, p2);
}

GridTopology classify_nodes(const LevelSet& ls, int n, double zeta, double alpha) {
  if (n < 2) throw std::invalid_argument("classify_nodes: need n >= 2");
  if (!(zeta > 0.0) || !(alpha > 0.0))
    throw std::invalid_argument("classify_nodes: zeta and alpha must be positive");

  GridTopology topo;
  topo.n = n;
  topo.h = 1.0 / n;
  const int m = n + 1;
  topo.phi.resize(m * m);
  topo.node_class.assign(m * m, NodeClass::Inactive);

  const double snap_threshold = zeta * std::pow(topo.h, alpha);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      double v = ls(topo.node_xy(i, j));
      // Snapping back to grid: near-boundary interior nodes are pushed to
      // the outside so that no cut becomes arbitrarily small.
      if (v < 0.0 && -v < snap_threshold)
        v = std::numeric_limits<double>::epsilon();
      topo.phi[topo.node_index(i, j)] = v;
    }
  }

  int internal_count = 0;
  for (int k = 0; k < m * m; ++k) {
    if (topo.phi[k] < 0.0) {
      topo.node_class[k] = NodeClass::Internal;
      ++internal_count;
    }
  }
  if (internal_count == 0)
    throw std::runtime_error("classify_nodes: empty domain at this resolution");

  // Ghost nodes: exterior nodes with an internal 8-neighbor.
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int k = topo.node_index(i, j);
      if (topo.node_class[k] == NodeClass::Internal) continue;
      bool touches_internal = false;
      for (int dj = -1; dj <= 1 && !touches_internal; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
          if (topo.node_class[topo.node_index(ii, jj)] == NodeClass::Internal) {
            touches_internal = true;
            break;
          }
        }
      }
      if (touches_internal) topo.node_class[k] = NodeClass::Ghost;
    }
  }
  return topo;
}

namespace {

inline bool inside(double phi) { return phi < 0.0; }

}  // namespace

EdgeCut edge_intersections(const std::array<Point, 4>& corners,
                           const std::array<double, 4>& phi) {
  int sign_changes = 0;
  bool have_a = false, have_b = false;
  EdgeCut cut;
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    if (inside(phi[i]) == inside(phi[j])) continue;
    ++sign_changes;
    const double theta = phi[i] / (phi[i] - phi[j]);
    const Point p{theta * corners[j].x + (1.0 - theta) * corners[i].x,
                  theta * corners[j].y + (1.0 - theta) * corners[i].y};
    if (phi[i] < 0.0) {
      cut.a = p;
      have_a = true;
    } else {
      cut.b = p;
      have_b = true;
    }
  }
  if (sign_changes != 2 || !have_a || !have_b)
    throw std::runtime_error(
        "edge_intersections: cell is not a single cut (sign changes != 2)");
  return cut;
}

std::optional<CutCellPolygon> clip_cell_values(Point origin, double h,
                                               const std::array<double, 4>& phi,
                                               int cell) {
  const std::array<Point, 4> corners{{{origin.x, origin.y},
                                      {origin.x + h, origin.y},
                                      {origin.x + h, origin.y + h},
                                      {origin.x, origin.y + h}}};
  int n_inside = 0;
  for (double v : phi) n_inside += inside(v) ? 1 : 0;
  if (n_inside == 0) return std::nullopt;

  CutCellPolygon poly;
  poly.cell = cell;
  poly.origin = origin;
  poly.h = h;

  if (n_inside == 4) {
    poly.vertices.assign(corners.begin(), corners.end());
    return poly;
  }

  const EdgeCut cut = edge_intersections(corners, phi);  // validates the cut
  poly.has_cut = true;
  poly.cut_a = cut.a;
  poly.cut_b = cut.b;
  // Walk the corner cycle, keeping interior corners and inserting the
  // intersection point of each sign-changing edge; the walk order is the
  // counterclockwise order of the polygon.
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    if (inside(phi[i])) poly.vertices.push_back(corners[i]);
    if (inside(phi[i]) != inside(phi[j]))
      poly.vertices.push_back(phi[i] < 0.0 ? cut.a : cut.b);
  }
  return poly;
}

std::optional<CutCellPolygon> clip_cell(const GridTopology& topo, int ci, int cj) {
  const std::array<double, 4> phi{
      topo.phi[topo.node_index(ci, cj)], topo.phi[topo.node_index(ci + 1, cj)],
      topo.phi[topo.node_index(ci + 1, cj + 1)], topo.phi[topo.node_index(ci, cj + 1)]};
  return clip_cell_values(topo.node_xy(ci, cj), topo.h, phi,
                          topo.cell_index(ci, cj));
}

double CutCellPolygon::area() const {
  double twice = 0.0;
  const size_t m = vertices.size();
  for (size_t r = 0; r < m; ++r) {
    const Point& p = vertices[r];
    const Point& q = vertices[(r + 1) % m];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

Point CutCellPolygon::centroid() const {
  double twice = 0.0, cx = 0.0, cy = 0.0;
  const size_t m = vertices.size();
  for (size_t r = 0; r < m; ++r) {
    const Point& p = vertices[r];
    const Point& q = vertices[(r + 1) % m];
    const double cross = p.x * q.y - q.x * p.y;
    twice += cross;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  if (twice == 0.0) throw std::runtime_error("CutCellPolygon: degenerate polygon");
  return {cx / (3.0 * twice), cy / (3.0 * twice)};
}

}  // namespace bionet::geom
