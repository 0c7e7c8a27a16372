#include "tokred/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace tokred {

namespace {

// Strict inversions of v via bottom-up merge sort; equal elements merge
// without counting, which is exactly the discordant-pair count when v is
// the second ranking listed in (first, second)-sorted order.
std::int64_t count_inversions(std::vector<double> v) {
    std::int64_t inversions = 0;
    std::vector<double> buf(v.size());
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo + width < v.size(); lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    inversions += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return inversions;
}

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("rankings must have equal length");
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    if (n < 2) throw std::invalid_argument("need at least two elements");
    for (double v : a)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite score");
    for (double v : b)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite score");

    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    // pair counts tied in a, in b, and in both
    std::int64_t ties_a = 0, ties_ab = 0;
    {
        std::int64_t run_a = 1, run_ab = 1;
        for (std::size_t i = 1; i < order.size(); ++i) {
            if (a[order[i]] == a[order[i - 1]]) {
                ++run_a;
                if (b[order[i]] == b[order[i - 1]]) ++run_ab;
                else {
                    ties_ab += tied_pairs(run_ab);
                    run_ab = 1;
                }
            } else {
                ties_a += tied_pairs(run_a);
                ties_ab += tied_pairs(run_ab);
                run_a = run_ab = 1;
            }
        }
        ties_a += tied_pairs(run_a);
        ties_ab += tied_pairs(run_ab);
    }
    std::int64_t ties_b = 0;
    {
        std::vector<double> sorted_b(b.begin(), b.end());
        std::sort(sorted_b.begin(), sorted_b.end());
        std::int64_t run = 1;
        for (std::size_t i = 1; i < sorted_b.size(); ++i) {
            if (sorted_b[i] == sorted_b[i - 1]) ++run;
            else {
                ties_b += tied_pairs(run);
                run = 1;
            }
        }
        ties_b += tied_pairs(run);
    }

    std::vector<double> b_in_a_order(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) b_in_a_order[i] = b[order[i]];
    const std::int64_t discordant = count_inversions(std::move(b_in_a_order));

    const std::int64_t total = n * (n - 1) / 2;
    // untied pairs split into concordant and discordant
    const std::int64_t concordant_minus_discordant =
        total - ties_a - ties_b + ties_ab - 2 * discordant;
    return static_cast<double>(concordant_minus_discordant) / static_cast<double>(total);
}

double density_at_mass(std::span<const double> scores, double mass) {
    if (scores.empty()) throw std::invalid_argument("scores must be non-empty");
    if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("mass must lie in (0,1]");
    double total = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0)) throw std::invalid_argument("scores must be non-negative");
        total += s;
    }
    if (total <= 0.0) throw std::invalid_argument("scores must not be all zero");

    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    // 1e-12 relative slack so exact-boundary masses (uniform scores, round
    // fractions) resolve the way exact arithmetic would
    const double target = mass * total * (1.0 - 1e-12);
    double acc = 0.0;
    for (std::size_t m = 0; m < sorted.size(); ++m) {
        acc += sorted[m];
        if (acc >= target) return static_cast<double>(m + 1) / static_cast<double>(sorted.size());
    }
    return 1.0;  // the full set always covers the mass
}

double recency_mass(std::span<const double> scores, double tail_fraction) {
    if (scores.empty()) throw std::invalid_argument("scores must be non-empty");
    if (!(tail_fraction >= 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("tail_fraction must lie in [0,1]");
    double total = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0)) throw std::invalid_argument("scores must be non-negative");
        total += s;
    }
    if (total <= 0.0) throw std::invalid_argument("scores must not be all zero");

    const auto n = static_cast<std::size_t>(scores.size());
    const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
    double tail_sum = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) tail_sum += scores[i];
    return tail_sum / total;
}

StabilityReport stability_report(const std::vector<ImportanceMap>& maps) {
    StabilityReport report;
    if (maps.empty()) return report;
    const std::size_t n = maps.front().scores.size();
    for (const ImportanceMap& map : maps)
        if (map.scores.size() != n)
            throw std::invalid_argument("importance maps must rank the same token set");

    for (std::size_t i = 0; i + 1 < maps.size(); ++i) {
        report.tau_layer_pairs.emplace_back(maps[i].layer_index, maps[i + 1].layer_index);
        report.taus.push_back(kendall_tau(maps[i].scores, maps[i + 1].scores));
    }
    for (const ImportanceMap& map : maps) {
        LayerDensity d;
        d.layer = map.layer_index;
        for (std::size_t u = 0; u < map.per_unit.rows; ++u) {
            const double* row = map.per_unit.row(u);
            d.unit_density.push_back(density_at_mass(std::span<const double>(row, map.per_unit.cols), 0.8));
        }
        report.densities.push_back(std::move(d));
    }
    return report;
}

}  // namespace tokred
