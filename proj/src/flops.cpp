#include "tokred/flops.hpp"

#include <stdexcept>

namespace tokred {

std::uint64_t layer_flops(LayerKind kind, std::uint64_t live_tokens, const ArchitectureSpec& spec) {
    if (live_tokens < 1) throw std::invalid_argument("live_tokens must be at least 1");
    const std::uint64_t t = live_tokens;
    const std::uint64_t d = static_cast<std::uint64_t>(spec.hidden_dim);
    switch (kind) {
        case LayerKind::Attention:
            return 2 * (4 * t * d * d) + 2 * (2 * t * t * d);
        case LayerKind::Mamba: {
            const std::uint64_t gn = static_cast<std::uint64_t>(spec.mamba_groups) * spec.state_dim;
            const std::uint64_t proj = 2 * d * d + 2 * d * gn + d * spec.mamba_groups;
            const std::uint64_t scan =
                static_cast<std::uint64_t>(spec.mamba_heads) * spec.mamba_head_dim * spec.state_dim;
            return 2 * t * proj + 2 * t * scan;
        }
        case LayerKind::Mlp:
            return 2 * (2 * t * d * static_cast<std::uint64_t>(spec.mlp_hidden_dim));
    }
    return 0;
}

FlopsBreakdown account(const RetentionPlan& plan, const ArchitectureSpec& spec, int n_visual,
                       int m_text) {
    if (static_cast<int>(plan.budgets.size()) != spec.num_layers)
        throw std::invalid_argument("plan and architecture disagree on layer count");
    if (n_visual < 1 || m_text < 0) throw std::invalid_argument("token counts out of range");

    FlopsBreakdown breakdown;
    breakdown.per_layer.resize(spec.num_layers);
    std::uint64_t live = static_cast<std::uint64_t>(n_visual);
    const std::uint64_t full = static_cast<std::uint64_t>(n_visual) + m_text;
    for (int l = 0; l < spec.num_layers; ++l) {
        const LayerKind kind = spec.layer_kinds[l];
        breakdown.per_layer[l] = layer_flops(kind, live + m_text, spec);
        breakdown.total += breakdown.per_layer[l];
        breakdown.baseline_total += layer_flops(kind, full, spec);
        live = static_cast<std::uint64_t>(plan.budgets[l]);
    }
    breakdown.speedup =
        static_cast<double>(breakdown.baseline_total) / static_cast<double>(breakdown.total);
    return breakdown;
}

}  // namespace tokred
