#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "tokred/arch.hpp"
#include "tokred/mat.hpp"

namespace tokred {

// Weight layout convention everywhere: out = in * W where W is
// (in_dim x out_dim) row-major, no biases.

struct AttentionWeights {
    MatF wq;  // d x (H * d_h)
    MatF wk;  // d x (kv_heads * d_h)
    MatF wv;  // d x (kv_heads * d_h)
    MatF wo;  // d x d
};

struct MambaWeights {
    MatF wx;      // d x (heads * p)
    MatF wb;      // d x (G * n)
    MatF wc;      // d x (G * n)
    MatF wdelta;  // d x G   (per-group discretization gate, pre-softplus)
    MatF wout;    // d x d
    std::vector<float> a;  // per-head decay base, strictly positive
};

struct MlpWeights {
    MatF w1;  // d x d_ff
    MatF w2;  // d_ff x d
};

using LayerWeights = std::variant<AttentionWeights, MambaWeights, MlpWeights>;

struct Parameters {
    std::vector<LayerWeights> layers;
    std::uint64_t seed = 0;
};

// Deterministic init: a single gaussian stream (stddev 1/sqrt(d)) drawn
// layer by layer in layer order, matrices in declaration order, entries
// row-major; per-head a drawn uniform in [0.5, 1.5] after the matrices.
// Identical (spec, seed) pairs produce bit-identical Parameters.
Parameters init_parameters(const ArchitectureSpec& spec, std::uint64_t seed);

}  // namespace tokred
