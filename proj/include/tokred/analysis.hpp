#pragma once

#include <span>
#include <vector>

#include "tokred/importance.hpp"

namespace tokred {

// Kendall's tau-a over two equal-length score vectors:
// (concordant - discordant) / binom(n, 2), pairs tied in either input
// counting toward neither side. O(n log n) via merge-sort inversion
// counting; the pair counts are exact integers, so the result matches
// quadratic pair enumeration bit for bit.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// Smallest fraction of tokens whose scores cover `mass` of the total
// score sum. Scores must be non-negative with a positive sum.
double density_at_mass(std::span<const double> scores, double mass);

// Fraction of the total score mass carried by the last
// ceil(tail_fraction * N) tokens.
double recency_mass(std::span<const double> scores, double tail_fraction);

// Cross-layer diagnostics over importance maps collected with reduction
// disabled (so every map ranks the same token set).
struct LayerDensity {
    int layer = -1;
    std::vector<double> unit_density;  // one density per head/group at mass 0.8
};

struct StabilityReport {
    std::vector<std::pair<int, int>> tau_layer_pairs;  // consecutive scoring layers
    std::vector<double> taus;
    std::vector<LayerDensity> densities;
};

StabilityReport stability_report(const std::vector<ImportanceMap>& maps);

}  // namespace tokred
