#pragma once

#include "texelatt/geometry.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

/// Spatial point-pattern statistics over texel centroids.
///
/// One-dimensional variants operate on coordinates projected onto a single
/// axis (used for stripe groups).
namespace texelatt::layout {

/// Side of the reference canvas that densities are expressed in.
inline constexpr double kReferenceSide = 1024.0;

/// Bin of an angle in [0, 180) among [0,60), [60,120), [120,180).
int orientation_bin(double deg);

/// Texels per reference canvas: coordinates are rescaled so the canvas width
/// maps to kReferenceSide, then count / area * kReferenceSide^2.
double density_2d(std::size_t count, int width, int height);

/// (N - 1) / extent in reference units, times kReferenceSide. Throws
/// DegenerateGeometry when all coordinates coincide.
double density_1d(std::span<const double> coords, int canvas_side);

/// Quadrat counts over a gx x gy grid of the canvas: sum (n_i - e)^2 / e / N.
double homogeneity_2d(std::span<const Vec2> points, int width, int height, int gx = 4, int gy = 4);

/// Same statistic over `bins` equal bins spanning [min, max] of the coordinates.
double homogeneity_1d(std::span<const double> coords, int bins = 8);

/// Indices of the k nearest neighbours of points[i] (exact; ties by index).
std::vector<std::size_t> nearest_neighbors(std::span<const Vec2> points, std::size_t i, std::size_t k);

/// Histogram of folded point-pair vector angles to the k nearest neighbours.
std::array<double, 3> pair_orientation_hist(std::span<const Vec2> points, std::size_t k = 8);

/// Mean normalized residual of k-neighbourhoods (plus any points tied with
/// the k-th neighbour) under point reflection about their center. Only
/// centroids whose distance to the point-set bounding box is at least their
/// k-th neighbour distance are scored. Empty when fewer than 5 points or no
/// centroid qualifies.
std::optional<double> local_reflective_symmetry(std::span<const Vec2> points, std::size_t k = 4);
std::optional<double> local_reflective_symmetry_1d(std::span<const double> coords, std::size_t k = 2);

/// Mean normalized nearest-centroid residual of neighbourhoods translated by
/// their own pair vectors. Same scoring set and emptiness rule as above.
std::optional<double> translational_symmetry(std::span<const Vec2> points, std::size_t k = 4);
std::optional<double> translational_symmetry_1d(std::span<const double> coords, std::size_t k = 2);

}  // namespace texelatt::layout
