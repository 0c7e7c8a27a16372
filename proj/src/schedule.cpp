#include "tokred/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tokred {

void ScheduleSpec::validate(int num_layers) const {
    if (min_tokens < 1) throw std::invalid_argument("min_tokens must be at least 1");
    if (kind == ScheduleKind::Sigmoid) {
        if (!(sigmoid.r_start > 0.0 && sigmoid.r_start <= 1.0) ||
            !(sigmoid.r_end > 0.0 && sigmoid.r_end <= 1.0))
            throw std::invalid_argument("retention ratios must lie in (0,1]");
        if (sigmoid.r_end > sigmoid.r_start) throw std::invalid_argument("r_end must not exceed r_start");
        return;
    }
    if (step_table.empty()) throw std::invalid_argument("step table must not be empty");
    std::vector<int> cover(num_layers, 0);
    for (const StepRange& r : step_table) {
        if (!(r.ratio > 0.0 && r.ratio <= 1.0)) throw std::invalid_argument("retention ratios must lie in (0,1]");
        if (r.first < 0 || r.last >= num_layers || r.first > r.last)
            throw std::invalid_argument("step range outside [0, num_layers)");
        for (int l = r.first; l <= r.last; ++l) ++cover[l];
    }
    for (int l = 0; l < num_layers; ++l)
        if (cover[l] != 1) throw std::invalid_argument("step table must partition [0, num_layers)");
}

double sigmoid_retention(int layer, int num_layers, const SigmoidParams& p) {
    const double x = static_cast<double>(layer) / static_cast<double>(num_layers);
    const double s = 1.0 / (1.0 + std::exp(-p.k * (p.x0 - x)));
    return p.r_end + (p.r_start - p.r_end) * s;
}

double step_retention(int layer, const std::vector<StepRange>& table) {
    for (const StepRange& r : table)
        if (layer >= r.first && layer <= r.last) return r.ratio;
    throw std::invalid_argument("layer not covered by the step table");
}

namespace {

// Mamba layers of each inter-attention gap, leading and trailing gaps
// included: gap 0 is everything before the first attention layer, gap i
// sits between attention i-1 and i, the last gap follows the final
// attention layer.
std::vector<std::vector<int>> mamba_gaps(const ArchitectureSpec& arch) {
    const std::vector<int> attn = arch.layers_of(LayerKind::Attention);
    std::vector<std::vector<int>> gaps(attn.size() + 1);
    for (int l : arch.layers_of(LayerKind::Mamba)) {
        std::size_t gap = 0;
        while (gap < attn.size() && l > attn[gap]) ++gap;
        gaps[gap].push_back(l);
    }
    return gaps;
}

std::vector<int> reduction_layers_for(const ArchitectureSpec& arch, const ReductionPattern& pattern) {
    const std::vector<int> attn = arch.layers_of(LayerKind::Attention);
    const std::vector<int> mamba = arch.layers_of(LayerKind::Mamba);
    std::vector<int> layers;

    switch (pattern.kind) {
        case PatternKind::Baseline:
            break;
        case PatternKind::FirstAttn:
            if (attn.empty()) throw std::invalid_argument("pattern needs an attention layer");
            layers.push_back(attn.front());
            break;
        case PatternKind::AllAttn:
            if (attn.empty()) throw std::invalid_argument("pattern needs an attention layer");
            layers = attn;
            break;
        case PatternKind::FirstMamba:
            if (mamba.empty()) throw std::invalid_argument("pattern needs a Mamba layer");
            layers.push_back(mamba.front());
            break;
        case PatternKind::SecondMamba:
            if (mamba.size() < 2) throw std::invalid_argument("pattern needs two Mamba layers");
            layers.push_back(mamba[1]);
            break;
        case PatternKind::AllAttnPlusM: {
            if (attn.empty()) throw std::invalid_argument("pattern needs an attention layer");
            if (mamba.empty()) throw std::invalid_argument("pattern needs a Mamba layer");
            if (pattern.mamba_per_gap < 1) throw std::invalid_argument("mamba_per_gap must be positive");
            std::vector<int> slots = pattern.gap_slots;
            if (slots.empty()) {
                // best-performing placements: slot (2) for one per gap,
                // slots (2,3) for two per gap
                for (int s = 0; s < pattern.mamba_per_gap; ++s) slots.push_back(2 + s);
            }
            layers = attn;
            for (const auto& gap : mamba_gaps(arch)) {
                for (int slot : slots) {
                    if (slot < 1) throw std::invalid_argument("gap slots are 1-based");
                    if (slot <= static_cast<int>(gap.size())) layers.push_back(gap[slot - 1]);
                }
            }
            break;
        }
        case PatternKind::AllLayers: {
            if (mamba.empty()) throw std::invalid_argument("pattern needs a Mamba layer");
            // every attention and Mamba layer except the stack's first and
            // last Mamba layers: the entry layer keeps full retention and a
            // reduction behind the last scoring layer buys nothing
            layers = attn;
            for (int l : mamba)
                if (l != mamba.front() && l != mamba.back()) layers.push_back(l);
            break;
        }
    }
    std::sort(layers.begin(), layers.end());
    return layers;
}

}  // namespace

RetentionPlan build_plan(const ArchitectureSpec& arch, const ReductionPattern& pattern,
                         const ScheduleSpec& sched, int n_visual) {
    if (n_visual < 1) throw std::invalid_argument("n_visual must be at least 1");
    arch.validate();
    sched.validate(arch.num_layers);

    RetentionPlan plan;
    plan.n_visual = n_visual;
    plan.min_tokens = sched.min_tokens;
    plan.reduction_layers = reduction_layers_for(arch, pattern);
    plan.ratios.assign(arch.num_layers, 1.0);
    plan.budgets.assign(arch.num_layers, n_visual);

    std::size_t next_reduction = 0;
    double ratio = 1.0;
    int live = n_visual;
    for (int l = 0; l < arch.num_layers; ++l) {
        if (next_reduction < plan.reduction_layers.size() && plan.reduction_layers[next_reduction] == l) {
            double r = sched.kind == ScheduleKind::Sigmoid
                           ? sigmoid_retention(l, arch.num_layers, sched.sigmoid)
                           : step_retention(l, sched.step_table);
            ratio = std::min(ratio, r);
            int budget = static_cast<int>(std::llround(ratio * n_visual));
            budget = std::max(budget, sched.min_tokens);
            live = std::min(live, budget);  // floor may exceed live; never grow
            ++next_reduction;
        }
        plan.ratios[l] = ratio;
        plan.budgets[l] = live;
    }
    return plan;
}

double compression_rate(const RetentionPlan& plan) {
    const std::size_t num_layers = plan.budgets.size();
    if (num_layers == 0 || plan.n_visual < 1) throw std::invalid_argument("plan is not resolved");
    // tokens entering layer 0 are the full N; layer l>0 sees budgets[l-1]
    double sum = 1.0;
    for (std::size_t l = 0; l + 1 < num_layers; ++l)
        sum += static_cast<double>(plan.budgets[l]) / static_cast<double>(plan.n_visual);
    return 100.0 * sum / static_cast<double>(num_layers);
}

std::string pattern_kind_name(PatternKind kind) {
    switch (kind) {
        case PatternKind::Baseline: return "baseline";
        case PatternKind::FirstAttn: return "first_attn";
        case PatternKind::AllAttn: return "all_attn";
        case PatternKind::FirstMamba: return "first_mamba";
        case PatternKind::SecondMamba: return "second_mamba";
        case PatternKind::AllAttnPlusM: return "all_attn_plus_m";
        case PatternKind::AllLayers: return "all_layers";
    }
    return "?";
}

PatternKind pattern_kind_from_name(const std::string& name) {
    if (name == "baseline") return PatternKind::Baseline;
    if (name == "first_attn") return PatternKind::FirstAttn;
    if (name == "all_attn") return PatternKind::AllAttn;
    if (name == "first_mamba") return PatternKind::FirstMamba;
    if (name == "second_mamba") return PatternKind::SecondMamba;
    if (name == "all_attn_plus_m") return PatternKind::AllAttnPlusM;
    if (name == "all_layers") return PatternKind::AllLayers;
    throw std::invalid_argument("unknown pattern kind: " + name);
}

ScheduleSpec schedule_from_json(const nlohmann::json& j) {
    ScheduleSpec sched;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sigmoid") {
        sched.kind = ScheduleKind::Sigmoid;
        sched.sigmoid.k = j.at("k").get<double>();
        sched.sigmoid.x0 = j.at("x0").get<double>();
        sched.sigmoid.r_start = j.at("r_start").get<double>();
        sched.sigmoid.r_end = j.at("r_end").get<double>();
    } else if (kind == "step") {
        sched.kind = ScheduleKind::StepDecay;
        for (const auto& r : j.at("table"))
            sched.step_table.push_back(
                {r.at("from").get<int>(), r.at("to").get<int>(), r.at("ratio").get<double>()});
    } else {
        throw std::invalid_argument("unknown schedule kind: " + kind);
    }
    if (j.contains("min_tokens")) sched.min_tokens = j.at("min_tokens").get<int>();
    return sched;
}

nlohmann::json schedule_to_json(const ScheduleSpec& sched) {
    nlohmann::json j;
    if (sched.kind == ScheduleKind::Sigmoid) {
        j["kind"] = "sigmoid";
        j["k"] = sched.sigmoid.k;
        j["x0"] = sched.sigmoid.x0;
        j["r_start"] = sched.sigmoid.r_start;
        j["r_end"] = sched.sigmoid.r_end;
    } else {
        j["kind"] = "step";
        nlohmann::json table = nlohmann::json::array();
        for (const StepRange& r : sched.step_table)
            table.push_back({{"from", r.first}, {"to", r.last}, {"ratio", r.ratio}});
        j["table"] = table;
    }
    j["min_tokens"] = sched.min_tokens;
    return j;
}

ReductionPattern pattern_from_json(const nlohmann::json& j) {
    ReductionPattern pattern;
    pattern.kind = pattern_kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("mamba_per_gap")) pattern.mamba_per_gap = j.at("mamba_per_gap").get<int>();
    if (j.contains("gap_slots")) pattern.gap_slots = j.at("gap_slots").get<std::vector<int>>();
    return pattern;
}

nlohmann::json pattern_to_json(const ReductionPattern& pattern) {
    nlohmann::json j;
    j["kind"] = pattern_kind_name(pattern.kind);
    j["mamba_per_gap"] = pattern.mamba_per_gap;
    j["gap_slots"] = pattern.gap_slots;
    return j;
}

}  // namespace tokred
