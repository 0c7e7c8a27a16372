#pragma once

#include <cstdint>
#include <vector>

#include "tokred/arch.hpp"
#include "tokred/schedule.hpp"

namespace tokred {

// Deterministic FLOP model, counting 2 FLOPs per multiply-accumulate.
// Per layer with T live tokens:
//   attention  2*(4*T*d^2) + 2*(2*T^2*d)   QKVO projections as four d x d
//                                          matmuls plus score and value
//                                          matmuls; no causal halving
//   mamba      2*T*(2*d^2 + 2*d*G*n + d*G) + 2*T*heads*p*n
//                                          x/b/c/delta/out projections
//                                          plus one scan pass per head
//   mlp        2*(2*T*d*d_ff)
// The load-bearing contract is monotonicity in T and the quadratic vs
// linear asymptotics per kind, not the constants.
std::uint64_t layer_flops(LayerKind kind, std::uint64_t live_tokens, const ArchitectureSpec& spec);

struct FlopsBreakdown {
    std::vector<std::uint64_t> per_layer;
    std::uint64_t total = 0;
    std::uint64_t baseline_total = 0;
    double speedup = 1.0;
};

// Evaluates the model over a resolved plan: layer l runs on the tokens
// that survive layer l-1 plus the M text tokens. baseline_total is the
// same stack with no reduction.
FlopsBreakdown account(const RetentionPlan& plan, const ArchitectureSpec& spec, int n_visual,
                       int m_text);

}  // namespace tokred
