#pragma once

#include <span>
#include <vector>

#include "tokred/sequence.hpp"

namespace tokred {

// Order-preserving top-K pick over visual-token scores.
struct SelectionResult {
    std::vector<int> kept_indices;  // strictly increasing visual indices
    int dropped_count = 0;
};

// Keeps the max(k, min_tokens) highest-scoring tokens, or everything when
// the sequence is already at or below that size. Ties break toward the
// lower index; the result is sorted ascending so temporal order survives.
// k == 0 throws (the query must keep at least one visual token).
SelectionResult select_top_k(std::span<const double> scores, int k, int min_tokens);

// Restricts h to the selected visual tokens; text tokens are never
// dropped. Roles and original position_ids are preserved.
HiddenSequence apply_reduction(const HiddenSequence& h, const SelectionResult& sel);

}  // namespace tokred
