#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace tokred {

enum class LayerKind { Attention, Mamba, Mlp };

char layer_kind_code(LayerKind k);          // 'A' / 'M' / 'F'
LayerKind layer_kind_from_code(char c);

// Static description of a hybrid decoder stack: the ordered layer kinds
// plus the dimensions shared by every layer of a given kind.
struct ArchitectureSpec {
    int num_layers = 0;
    std::vector<LayerKind> layer_kinds;

    int hidden_dim = 0;      // d
    int attn_heads = 0;      // H
    int attn_head_dim = 0;   // d_h
    int kv_heads = 0;        // grouped-query KV heads
    int mamba_heads = 0;
    int mamba_head_dim = 0;  // p
    int state_dim = 0;       // n
    int mamba_groups = 0;    // G
    int mlp_hidden_dim = 0;  // d_ff

    // Throws std::invalid_argument if any structural invariant is broken:
    // layer count mismatch, H*d_h != d, mamba_heads*p != d, group or
    // KV-head divisibility.
    void validate() const;

    std::vector<int> layers_of(LayerKind kind) const;
    int count_of(LayerKind kind) const;
};

// Named presets:
//   nemotron62         62-layer hybrid, attention at {7,16,25,34,43,52},
//                      remaining layers alternating Mamba/MLP (28 each).
//                      Dimensions are production-scale; use it for plan
//                      and FLOP arithmetic, not for running forwards.
//   tiny8              8-layer desk-scale hybrid, attention at {1,5}.
//   transformer-only-N N (attention, MLP) pairs, no Mamba layers.
ArchitectureSpec build_preset(const std::string& name);

nlohmann::json arch_to_json(const ArchitectureSpec& spec);
ArchitectureSpec arch_from_json(const nlohmann::json& j);

}  // namespace tokred
