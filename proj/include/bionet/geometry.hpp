#pragma once

// Level-set description of the computational domain and its intersection
// with a uniform background grid: node classification (internal / ghost /
// inactive), snapping of near-boundary nodes, boundary-edge intersections
// and clipping of background cells into cut-cell polygons.

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace bionet::geom {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Rotate `p` counterclockwise by `theta` around `pivot`.
Point rotate_about(Point p, Point pivot, double theta);

/// Signed implicit description of the domain inside the unit square:
/// phi < 0 strictly inside, phi > 0 outside, phi = 0 on the boundary.
class LevelSet {
public:
  static LevelSet circle(Point center, double radius);
  static LevelSet leaf(Point center1, Point center2, double radius);
  /// Leaf with both circle centers rotated by `theta` around the center of
  /// the unit square, so the rotated domain stays inside the square.
  static LevelSet rotated_leaf(Point center1, Point center2, double radius,
                               double theta);

  double operator()(double x, double y) const;
  double operator()(Point p) const { return (*this)(p.x, p.y); }

  const std::string& name() const { return name_; }
  double theta() const { return theta_; }

private:
  LevelSet() = default;

  bool two_circles_ = false;  // leaf variants take the max of two circles
  Point c1_{}, c2_{};
  double radius_ = 0.0;
  double theta_ = 0.0;
  std::string name_;
};

enum class NodeClass : unsigned char { Internal, Ghost, Inactive };

/// Uniform n x n background grid with per-node level-set values
/// (post-snapping) and node classification.
struct GridTopology {
  int n = 0;        // cells per axis
  double h = 0.0;   // cell size, 1/n
  std::vector<double> phi;             // (n+1)^2 values, row-major in j
  std::vector<NodeClass> node_class;   // same layout

  int nodes_per_axis() const { return n + 1; }
  int node_count() const { return (n + 1) * (n + 1); }
  int cell_count() const { return n * n; }
  int node_index(int i, int j) const { return j * (n + 1) + i; }
  int cell_index(int ci, int cj) const { return cj * n + ci; }
  Point node_xy(int i, int j) const { return {i * h, j * h}; }

  NodeClass cls(int i, int j) const { return node_class[node_index(i, j)]; }
  bool internal(int i, int j) const { return cls(i, j) == NodeClass::Internal; }
  bool active(int i, int j) const { return cls(i, j) != NodeClass::Inactive; }
};

/// Evaluate the level set on the grid, snap near-boundary interior nodes
/// (any node with 0 < -phi < zeta*h^alpha gets phi := +machine epsilon),
/// then classify: internal if phi < 0, ghost if phi >= 0 with an internal
/// 8-neighbor, inactive otherwise.
///
/// Throws std::runtime_error if no node is internal.
GridTopology classify_nodes(const LevelSet& ls, int n, double zeta = 1.0,
                            double alpha = 2.0);

/// Intersection points of the boundary with the edges of one cut cell.
/// `a` lies on the edge entered from the inside (phi(k_i) < 0), `b` on the
/// edge entered from the outside.
struct EdgeCut {
  Point a{};
  Point b{};
};

/// Boundary-edge intersections from the four corner level-set values.
/// Corners are ordered counterclockwise from the lower-left:
/// k0=(x0,y0), k1=(x0+h,y0), k2=(x0+h,y0+h), k3=(x0,y0+h).
/// On each sign-changing edge (k_i, k_{i+1}):
///   theta = phi(k_i) / (phi(k_i) - phi(k_{i+1})),  P = theta*k_{i+1} + (1-theta)*k_i,
/// labeled A when phi(k_i) < 0, else B.
///
/// Throws std::runtime_error unless the corner signs change exactly twice
/// around the cycle (a cell with four alternations cannot be represented
/// as a single cut and is rejected).
EdgeCut edge_intersections(const std::array<Point, 4>& corners,
                           const std::array<double, 4>& phi);

/// Intersection of one background cell with the discrete domain: a simple
/// counterclockwise polygon with 3, 4 or 5 vertices. Interior corners
/// (phi < 0) are kept; on cut cells the two boundary intersection points
/// are inserted, and the chord between them is one polygon edge.
struct CutCellPolygon {
  int cell = -1;        // owning cell index, -1 for free-standing polygons
  Point origin{};       // lower-left corner of the owning cell
  double h = 0.0;       // cell size
  std::vector<Point> vertices;   // counterclockwise
  bool has_cut = false;
  Point cut_a{}, cut_b{};        // boundary chord endpoints (labels from edge_intersections)

  double area() const;
  Point centroid() const;
};

/// Clip a cell given its origin, size and the four corner level-set values.
/// Returns the full square when all corners are interior, the cut polygon
/// when the signs change twice, and nothing when no corner is interior.
std::optional<CutCellPolygon> clip_cell_values(Point origin, double h,
                                               const std::array<double, 4>& phi,
                                               int cell = -1);

/// Clip cell (ci, cj) of a classified topology.
std::optional<CutCellPolygon> clip_cell(const GridTopology& topo, int ci, int cj);

}  // namespace bionet::geom
