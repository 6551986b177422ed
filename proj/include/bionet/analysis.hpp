#pragma once

// Post-processing: empirical Wasserstein distances between nodal value
// vectors, Richardson order estimation, reflection-symmetry residuals,
// marching-squares contours and superlevel-set component counts.

#include <vector>

#include "bionet/fem.hpp"
#include "bionet/geometry.hpp"

namespace bionet::analysis {

/// p-Wasserstein distance between the empirical distributions of the two
/// value vectors (each sample carries mass 1/len). For equal lengths this is
/// ((1/n) sum |u_(i) - v_(i)|^p)^(1/p) over the sorted entries; for unequal
/// lengths the piecewise-constant quantile functions are integrated.
double wasserstein_distance(std::vector<double> u, std::vector<double> v,
                            double p = 1.0);

/// log(e_coarse / e_fine) / log(ratio); both errors must be positive.
double richardson_order(double e_coarse, double e_fine, double ratio = 2.0);

/// Scalar samples on the active nodes of a uniform lattice.
struct LatticeField {
  int n = 0;       // cells per axis
  double h = 0.0;
  std::vector<int> sample_at;   // (n+1)^2 -> sample index, -1 where absent
  std::vector<double> value;

  int index(int i, int j) const { return sample_at[j * (n + 1) + i]; }
  bool has(int i, int j) const { return index(i, j) >= 0; }
  double at(int i, int j) const { return value[index(i, j)]; }
};

/// One component of a nodal field as a lattice field.
LatticeField component_field(const fem::FeSpace& space, const fem::NodalField& f,
                             int comp = 0);
/// The plotted magnitude: the scalar C itself, or the Frobenius norm of the
/// tensor.
LatticeField magnitude_field(const fem::FeSpace& space, const fem::NodalField& c);

enum class Axis { VerticalMid, HorizontalMid, Diagonal };  // x=1/2, y=1/2, y=x

/// Max over mirrored active node pairs of |u(node) - parity * u(mirror)|.
double symmetry_residual(const LatticeField& f, Axis axis, double parity = 1.0);

/// Tensor reflection residual: C12 flips sign across the axis-aligned
/// mirrors, the diagonal mirror swaps C11 and C22.
double symmetry_residual_tensor(const LatticeField& c11, const LatticeField& c12,
                                const LatticeField& c22, Axis axis);

struct ContourSegment {
  geom::Point a{}, b{};
};
struct ContourCell {
  int ci = 0, cj = 0;
  std::vector<ContourSegment> segments;  // 1, or 2 on disambiguated saddles
};

/// Marching squares at the given level over cells whose four corners all
/// carry samples; saddle cells are split by the cell-center average.
std::vector<ContourCell> contour_cells(const LatticeField& f, double level);

/// Number of 8-connected components of {value > level} over the sampled nodes.
int connected_components_above(const LatticeField& f, double level);

/// Entrywise natural log with the documented floor (values are clamped from
/// below before the log, so nonpositive entries map to log(floor)).
std::vector<double> log_field(std::vector<double> values, double floor = 1e-16);

}  // namespace bionet::analysis
