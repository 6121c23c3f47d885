#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ntfa/diff/graph.hpp"

namespace ntfa::diff {

/// Bounds applied to every log-scale before it is exponentiated.
inline constexpr double kMinLogScale = -8.0;
inline constexpr double kMaxLogScale = 8.0;

/// log(2*pi) / 2
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

double clamp_log_scale(double log_scale);

// Elementwise arithmetic.  Operands must have equal shapes, or one of them
// must hold a single value, which is broadcast.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_constant(Var a, double c);
Var neg(Var a);
Var exp(Var a);
/// Natural log; throws NumericalError for non-positive entries.
Var log(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);

/// Sum of every entry, as a scalar.
Var sum(Var a);

/// C = A * B for rank-2 A (m x k) and B (k x n).
Var matmul(Var a, Var b);

Var reshape(Var a, Shape shape);
/// out[i] = a[indices[i]], laid out with `shape`.
Var gather(Var a, std::vector<std::size_t> indices, Shape shape);
/// Flattened concatenation.
Var concat(std::span<const Var> parts);
/// Repeats a length-K vector as the rows of a rows x K matrix.
Var tile_rows(Var a, std::size_t rows);
/// Packs single-value nodes into a vector.
Var stack(std::span<const Var> scalars);

/// x if x >= 0 else slope * x, with a single-value learnable slope.
Var prelu(Var x, Var slope);

/// Sum over elements of the Normal log-density
///   -log(2 pi)/2 - s - (x - mu)^2 / (2 exp(2 s)),  s = clamp(log_scale, -8, 8).
/// `mean` and `log_scale` match the shape of `x` or hold a single value.
Var gaussian_logpdf(Var x, Var mean, Var log_scale);

/// mean + exp(clamp(log_scale)) * noise.  The noise draw is a constant.
Var reparam_sample(Var mean, Var log_scale, const Tensor& noise);

/// Radial basis factor matrix F[k, v] = exp(-|grid_v - centers_k|^2 / exp(log_widths_k)).
/// centers: K x 3, log_widths: K, grid: V x 3 (constant).  Result: K x V.
Var rbf_factors(Var centers, Var log_widths, const Tensor& grid);

/// Fused Normal log-likelihood of data (T x V) around weights (T x K) times
/// factors (K x V) with one shared log-scale:
///   sum_{t,v} log N(data[t,v]; (weights * factors)[t,v], exp(log_scale)).
/// `data` is borrowed and must outlive the graph.
Var gaussian_linear_loglik(const Tensor& data, Var weights, Var factors, Var log_scale);

/// log(sum_i exp(x_i)) over the entries of `a`, as a scalar.
Var logsumexp(Var a);

}  // namespace ntfa::diff
