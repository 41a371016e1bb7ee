#pragma once

#include <utility>
#include <vector>

#include "hinge/sampler.hpp"
#include "hinge/tape.hpp"

namespace hinge {

// Which kernel computes the interaction. Both produce the same values; naive
// is the O(I_s * I_t) per-channel reference the fast path is tested against.
enum class ConvRoute { naive, fft };

// Pairs of (source metapath index, target metapath index). aligned mode pairs
// list entries one-to-one and requires equal lengths; cross mode is the full
// product, source-major.
std::vector<std::pair<size_t, size_t>> enumerate_combinations(size_t n_source, size_t n_target,
                                                              bool cross);

// Stacks per-position embedding lookups into the path embedding matrix
// [L, I, E]. Position i of every path is embedded through tables_by_position[i]
// (positions have different node types, hence different tables).
Value build_embedding_matrix(Tape& t, const PathBatch& batch,
                             const std::vector<uint32_t>& tables_by_position);

// Differentiable neighborhood interaction: src [Ls,Is,E] with tgt [Lt,It,E]
// producing [R, Is+It-1, E]. Aligned mode requires Ls == Lt and pairs row l
// with row l (R = L); all_pairs crosses every source row with every target row
// (R = Ls * Lt, source-major). Output position m sums products of source
// position a and target position b with a + b = m, per channel; position 0 is
// anchor x anchor when both inputs put their anchor at position 0.
// The fft route pads to the next power of two >= M, which leaves the circular
// wrap entirely in the zero padding, so it equals the direct sum exactly (up
// to float rounding). Its backward is the analytic adjoint (correlation with
// the partner input), also via FFT; the naive route's backward runs the
// transposed loops.
Value interact(Tape& t, Value src, Value tgt, ConvRoute route, bool all_pairs);

}  // namespace hinge
