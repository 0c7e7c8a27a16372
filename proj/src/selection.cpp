#include "tokred/selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tokred {

SelectionResult select_top_k(std::span<const double> scores, int k, int min_tokens) {
    const int n = static_cast<int>(scores.size());
    if (n < 1) throw std::invalid_argument("scores must be non-empty");
    if (k < 1) throw std::invalid_argument("selection budget must be at least 1");

    const int keep = std::max(k, min_tokens);
    SelectionResult result;
    if (n <= keep) {
        result.kept_indices.resize(n);
        std::iota(result.kept_indices.begin(), result.kept_indices.end(), 0);
        result.dropped_count = 0;
        return result;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;  // tie toward the earlier token
    });
    result.kept_indices.assign(order.begin(), order.begin() + keep);
    std::sort(result.kept_indices.begin(), result.kept_indices.end());
    result.dropped_count = n - keep;
    return result;
}

HiddenSequence apply_reduction(const HiddenSequence& h, const SelectionResult& sel) {
    h.validate();
    const int n_visual = h.visual_count();
    const int total = h.length();

    int prev = -1;
    for (int idx : sel.kept_indices) {
        if (idx < 0 || idx >= n_visual) throw std::out_of_range("kept index is not a visual position");
        if (idx <= prev) throw std::invalid_argument("kept indices must be strictly increasing");
        prev = idx;
    }

    const int kept_visual = static_cast<int>(sel.kept_indices.size());
    const int n_text = total - n_visual;
    HiddenSequence out;
    out.vectors = MatF(kept_visual + n_text, h.vectors.cols);
    out.roles.reserve(kept_visual + n_text);
    out.position_ids.reserve(kept_visual + n_text);

    int row = 0;
    auto copy_token = [&](int src) {
        const float* from = h.vectors.row(src);
        std::copy(from, from + h.vectors.cols, out.vectors.row(row));
        out.roles.push_back(h.roles[src]);
        out.position_ids.push_back(h.position_ids[src]);
        ++row;
    };
    for (int idx : sel.kept_indices) copy_token(idx);
    for (int t = n_visual; t < total; ++t) copy_token(t);
    return out;
}

}  // namespace tokred
