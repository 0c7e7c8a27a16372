#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tokred/arch.hpp"

namespace tokred {

enum class ScheduleKind { StepDecay, Sigmoid };

// Inclusive layer range [first, last] with a fixed retention ratio.
struct StepRange {
    int first = 0;
    int last = 0;
    double ratio = 1.0;
};

struct SigmoidParams {
    double k = 20.0;
    double x0 = 0.11;
    double r_start = 1.0;
    double r_end = 0.125;
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Sigmoid;
    std::vector<StepRange> step_table;  // StepDecay only
    SigmoidParams sigmoid;              // Sigmoid only
    int min_tokens = 144;

    // Ratios in (0,1], r_end <= r_start; step tables must partition
    // [0, num_layers). Throws std::invalid_argument otherwise.
    void validate(int num_layers) const;
};

enum class PatternKind { Baseline, FirstAttn, AllAttn, FirstMamba, SecondMamba, AllAttnPlusM, AllLayers };

// Which layers reduce. For AllAttnPlusM, Mamba layers are picked per
// inter-attention gap (the gaps before the first and after the last
// attention layer included) by 1-based slot index within the gap's Mamba
// layers; empty gap_slots defaults to slot {2} for one per gap and
// {2, 3} for two per gap.
struct ReductionPattern {
    PatternKind kind = PatternKind::Baseline;
    int mamba_per_gap = 1;
    std::vector<int> gap_slots;
};

// Resolved per-layer retention. budgets[l] is the number of visual
// tokens alive after layer l; both ratios and budgets are non-increasing.
struct RetentionPlan {
    std::vector<double> ratios;       // length L
    std::vector<int> budgets;         // length L
    std::vector<int> reduction_layers;
    int n_visual = 0;
    int min_tokens = 0;
};

// r(l) = r_end + (r_start - r_end) * sigmoid(k * (x0 - l/L)); smooth,
// non-increasing in l for k > 0, bounded by [r_end, r_start].
double sigmoid_retention(int layer, int num_layers, const SigmoidParams& params);

// Ratio of the unique table range covering the layer; uncovered layers
// throw std::invalid_argument.
double step_retention(int layer, const std::vector<StepRange>& table);

// Derives the reduction layer set from the pattern, samples the schedule
// at those layers (holding the ratio between them), and resolves integer
// budgets: round(r*N) floored at min_tokens, clamped non-increasing.
RetentionPlan build_plan(const ArchitectureSpec& arch, const ReductionPattern& pattern,
                         const ScheduleSpec& sched, int n_visual);

// Layer-averaged remaining-token ratio in percent: the mean over all L
// layers of (visual tokens entering the layer) / N.
double compression_rate(const RetentionPlan& plan);

std::string pattern_kind_name(PatternKind kind);
PatternKind pattern_kind_from_name(const std::string& name);

ScheduleSpec schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const ScheduleSpec& sched);
ReductionPattern pattern_from_json(const nlohmann::json& j);
nlohmann::json pattern_to_json(const ReductionPattern& pattern);

}  // namespace tokred
