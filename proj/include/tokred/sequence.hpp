#pragma once

#include <vector>

#include "tokred/mat.hpp"

namespace tokred {

enum class TokenRole { Visual, Text };

// A multimodal token sequence: visual tokens first, then the text query.
// position_ids carry the original indices so reductions can be traced
// back to the unreduced sequence.
struct HiddenSequence {
    MatF vectors;                   // T x d
    std::vector<TokenRole> roles;   // length T
    std::vector<int> position_ids;  // length T, strictly increasing

    int length() const { return static_cast<int>(roles.size()); }
    int visual_count() const;
    int text_count() const { return length() - visual_count(); }

    // Throws std::invalid_argument unless all Visual positions precede all
    // Text positions and position_ids are strictly increasing.
    void validate() const;
};

}  // namespace tokred
