#include "bionet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace bionet::analysis {

double wasserstein_distance(std::vector<double> u, std::vector<double> v, double p) {
  if (u.empty() || v.empty())
    throw std::invalid_argument("wasserstein_distance: empty input");
  if (p < 1.0) throw std::invalid_argument("wasserstein_distance: order < 1");
  std::sort(u.begin(), u.end());
  std::sort(v.begin(), v.end());

  double acc = 0.0;
  if (u.size() == v.size()) {
    const double w = 1.0 / u.size();
    for (size_t i = 0; i < u.size(); ++i)
      acc += w * std::pow(std::abs(u[i] - v[i]), p);
  } else {
    // Integrate |Q_u - Q_v|^p over [0,1]: both quantile functions are
    // piecewise constant with breakpoints at i/len.
    const size_t nu = u.size(), nv = v.size();
    size_t i = 0, j = 0;
    double pos = 0.0;
    while (i < nu && j < nv) {
      const double next_u = static_cast<double>(i + 1) / nu;
      const double next_v = static_cast<double>(j + 1) / nv;
      const double next = std::min(next_u, next_v);
      acc += (next - pos) * std::pow(std::abs(u[i] - v[j]), p);
      pos = next;
      if (next_u <= next) ++i;
      if (next_v <= next) ++j;
    }
  }
  return std::pow(acc, 1.0 / p);
}

double richardson_order(double e_coarse, double e_fine, double ratio) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0))
    throw std::invalid_argument("richardson_order: errors must be positive");
  if (!(ratio > 1.0))
    throw std::invalid_argument("richardson_order: refinement ratio must exceed 1");
  return std::log(e_coarse / e_fine) / std::log(ratio);
}

LatticeField component_field(const fem::FeSpace& space, const fem::NodalField& f,
                             int comp) {
  LatticeField lf;
  lf.n = space.topo.n;
  lf.h = space.topo.h;
  lf.sample_at.assign(space.topo.node_count(), -1);
  lf.value.reserve(space.n_dofs);
  for (int d = 0; d < space.n_dofs; ++d) {
    lf.sample_at[space.node_of_dof[d]] = d;
    lf.value.push_back(f.comp(comp)[d]);
  }
  return lf;
}

LatticeField magnitude_field(const fem::FeSpace& space, const fem::NodalField& c) {
  LatticeField lf = component_field(space, c, 0);
  if (c.components == 3) {
    for (int d = 0; d < space.n_dofs; ++d)
      lf.value[d] = fem::frobenius(c.comp(0)[d], c.comp(1)[d], c.comp(2)[d]);
  }
  return lf;
}

namespace {

std::pair<int, int> mirror(int i, int j, int n, Axis axis) {
  switch (axis) {
    case Axis::VerticalMid:
      return {n - i, j};
    case Axis::HorizontalMid:
      return {i, n - j};
    case Axis::Diagonal:
      return {j, i};
  }
  return {i, j};
}

}  // namespace

double symmetry_residual(const LatticeField& f, Axis axis, double parity) {
  double res = 0.0;
  const int m = f.n + 1;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!f.has(i, j)) continue;
      const auto [mi, mj] = mirror(i, j, f.n, axis);
      if (!f.has(mi, mj)) continue;
      res = std::max(res, std::abs(f.at(i, j) - parity * f.at(mi, mj)));
    }
  }
  return res;
}

double symmetry_residual_tensor(const LatticeField& c11, const LatticeField& c12,
                                const LatticeField& c22, Axis axis) {
  if (axis == Axis::Diagonal) {
    // (x,y) -> (y,x) maps C11 <-> C22 and keeps C12.
    double res = symmetry_residual(c12, axis, 1.0);
    const int m = c11.n + 1;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        if (!c11.has(i, j) || !c22.has(j, i)) continue;
        res = std::max(res, std::abs(c11.at(i, j) - c22.at(j, i)));
      }
    return res;
  }
  double res = symmetry_residual(c11, axis, 1.0);
  res = std::max(res, symmetry_residual(c22, axis, 1.0));
  res = std::max(res, symmetry_residual(c12, axis, -1.0));
  return res;
}

namespace {

geom::Point interpolate_edge(double x0, double y0, double v0, double x1, double y1,
                             double v1, double level) {
  const double t = (level - v0) / (v1 - v0);
  return {x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
}

}  // namespace

std::vector<ContourCell> contour_cells(const LatticeField& f, double level) {
  std::vector<ContourCell> out;
  const double h = f.h;
  for (int cj = 0; cj < f.n; ++cj) {
    for (int ci = 0; ci < f.n; ++ci) {
      if (!f.has(ci, cj) || !f.has(ci + 1, cj) || !f.has(ci + 1, cj + 1) ||
          !f.has(ci, cj + 1))
        continue;
      // Corner values counterclockwise from the lower-left.
      const double v[4] = {f.at(ci, cj), f.at(ci + 1, cj), f.at(ci + 1, cj + 1),
                           f.at(ci, cj + 1)};
      const double x[4] = {ci * h, (ci + 1) * h, (ci + 1) * h, ci * h};
      const double y[4] = {cj * h, cj * h, (cj + 1) * h, (cj + 1) * h};
      int mask = 0;
      for (int k = 0; k < 4; ++k)
        if (v[k] > level) mask |= 1 << k;
      if (mask == 0 || mask == 15) continue;

      std::vector<geom::Point> crossings;
      for (int k = 0; k < 4; ++k) {
        const int k2 = (k + 1) % 4;
        if ((v[k] > level) != (v[k2] > level))
          crossings.push_back(
              interpolate_edge(x[k], y[k], v[k], x[k2], y[k2], v[k2], level));
      }
      ContourCell cc{ci, cj, {}};
      if (crossings.size() == 2) {
        cc.segments.push_back({crossings[0], crossings[1]});
      } else if (crossings.size() == 4) {
        // Saddle, split by the cell-center average: when the center sides
        // with corner k1 the band runs k1-to-k3 and the segments cut off
        // the two opposite corners, otherwise the other way around.
        const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((center > level) == (v[1] > level)) {
          cc.segments.push_back({crossings[3], crossings[0]});
          cc.segments.push_back({crossings[1], crossings[2]});
        } else {
          cc.segments.push_back({crossings[0], crossings[1]});
          cc.segments.push_back({crossings[2], crossings[3]});
        }
      }
      out.push_back(std::move(cc));
    }
  }
  return out;
}

int connected_components_above(const LatticeField& f, double level) {
  const int m = f.n + 1;
  std::vector<int> parent(f.value.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<char> above(f.value.size());
  for (size_t k = 0; k < f.value.size(); ++k) above[k] = f.value[k] > level;

  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int s = f.index(i, j);
      if (s < 0 || !above[s]) continue;
      // 8-connectivity; it keeps diagonally thin branches in one piece.
      const int di[4] = {1, -1, 0, 1};
      const int dj[4] = {0, 1, 1, 1};
      for (int k = 0; k < 4; ++k) {
        const int ii = i + di[k], jj = j + dj[k];
        if (ii < 0 || ii >= m || jj >= m) continue;
        const int s2 = f.index(ii, jj);
        if (s2 >= 0 && above[s2]) unite(s, s2);
      }
    }
  }
  int count = 0;
  for (size_t k = 0; k < parent.size(); ++k)
    if (above[k] && find(static_cast<int>(k)) == static_cast<int>(k)) ++count;
  return count;
}

std::vector<double> log_field(std::vector<double> values, double floor) {
  for (double& v : values) v = std::log(std::max(v, floor));
  return values;
}

}  // namespace bionet::analysis
