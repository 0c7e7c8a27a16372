#pragma once

#include <vector>

#include "tokred/mat.hpp"
#include "tokred/ssm_scan.hpp"

namespace tokred {

// Query-conditioned importance of each visual token at one layer.
// per_unit holds the score rows before averaging: one row per attention
// head or per Mamba group (per Mamba head for the with-decay diagnostic).
// scores is the mean over per_unit rows.
struct ImportanceMap {
    int layer_index = -1;
    std::vector<double> scores;  // length N
    MatD per_unit;               // units x N
};

// Half-open index range [begin, end).
struct IndexRange {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
};

// Attention-layer score: per text query m and head h, softmax of
// q_m.k_i/sqrt(d_h) restricted to the N visual keys, averaged over m and
// h. Every per_unit row and the averaged scores sum to 1 over the
// visual tokens. q_text is M x (H*d_h); k_vis is N x (kv_heads*d_h) and
// each query head reads its mapped KV head's keys.
ImportanceMap attn_importance(const MatF& q_text, const MatF& k_vis, int heads, int kv_heads,
                              int head_dim);

// Mamba-layer score with the decay term omitted: mean of |b_bar_i . c_m|
// over text positions m and groups g. Unnormalized; used for ranking
// only. b_bar_vis is N x (G*n), c_text is M x (G*n).
ImportanceMap ssm_importance(const MatF& b_bar_vis, const MatF& c_text, int groups, int state_dim);

// Diagnostic variant that keeps the cumulative decay: mean of |W[t][i]|
// over the text rows of the full implicit-weight matrix, one scan input
// per unit (typically per head). vis_range must precede text_range and
// the two must not overlap.
ImportanceMap ssm_importance_with_decay(const std::vector<ScanInputs<double>>& units,
                                        IndexRange text_range, IndexRange vis_range);

}  // namespace tokred
