#include "tokred/sequence.hpp"

#include <stdexcept>

namespace tokred {

int HiddenSequence::visual_count() const {
    int n = 0;
    while (n < length() && roles[n] == TokenRole::Visual) ++n;
    return n;
}

void HiddenSequence::validate() const {
    const auto t = static_cast<std::size_t>(length());
    if (vectors.rows != t || position_ids.size() != t)
        throw std::invalid_argument("sequence fields disagree on length");
    bool seen_text = false;
    for (int i = 0; i < length(); ++i) {
        if (roles[i] == TokenRole::Text) seen_text = true;
        else if (seen_text)
            throw std::invalid_argument("visual token after text token");
        if (i > 0 && position_ids[i] <= position_ids[i - 1])
            throw std::invalid_argument("position_ids must be strictly increasing");
    }
}

}  // namespace tokred
