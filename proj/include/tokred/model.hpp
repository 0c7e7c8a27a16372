#pragma once

#include <optional>

#include "tokred/arch.hpp"
#include "tokred/params.hpp"
#include "tokred/sequence.hpp"

namespace tokred {

// Projections a layer exposes for token scoring, alongside its output.

struct AttentionIntermediates {
    MatF q;  // T x (H * d_h)
    MatF k;  // T x (kv_heads * d_h)
};

struct MambaIntermediates {
    MatF b_bar;  // T x (G * n), rows are delta_g * b_g per group
    MatF c;      // T x (G * n)
    MatF a_bar;  // T x mamba_heads, per-head per-step decay in (0,1)
};

struct LayerIntermediates {
    std::optional<AttentionIntermediates> attn;
    std::optional<MambaIntermediates> mamba;
};

// Runs one layer (causal grouped-query attention, selective-scan Mamba,
// or two-layer MLP), always with a residual connection. Dimension
// mismatches between params and h throw std::invalid_argument.
HiddenSequence forward_layer(int layer_index, const ArchitectureSpec& spec, const Parameters& params,
                             const HiddenSequence& h, LayerIntermediates* intermediates = nullptr);

// delta = softplus(raw) clamped to [1e-4, 5] so the discretized decay
// exp(-delta * a) stays strictly inside (0,1) in float and outlier
// activations cannot blow up the state update.
float discretization_step(float raw);

}  // namespace tokred
