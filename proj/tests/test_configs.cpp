#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tokred/runner.hpp"

using namespace tokred;

namespace {

nlohmann::json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    return j;
}

}  // namespace

TEST_CASE("every shipped config parses and plans") {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(TOKRED_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        CAPTURE(entry.path().string());
        const RunConfig cfg = run_config_from_json(load(entry.path()));
        const ArchitectureSpec arch = cfg.resolved_arch();
        const RetentionPlan plan = build_plan(arch, cfg.pattern, cfg.schedule, cfg.resolved_n_visual());
        CHECK(!plan.budgets.empty());
        int prev = cfg.resolved_n_visual();
        for (int b : plan.budgets) {
            CHECK(b <= prev);
            prev = b;
        }
    }
    CHECK(seen >= 13);
}

TEST_CASE("named configs resolve to their reduction-layer counts") {
    const auto plan_of = [](const char* name) {
        const RunConfig cfg = run_config_from_json(load(std::filesystem::path(TOKRED_CONFIG_DIR) / name));
        return build_plan(cfg.resolved_arch(), cfg.pattern, cfg.schedule, cfg.resolved_n_visual());
    };
    CHECK(plan_of("nemotron62_first_attn_25.json").reduction_layers.size() == 1);
    CHECK(plan_of("nemotron62_all_attn_25.json").reduction_layers.size() == 6);
    CHECK(plan_of("nemotron62_first_mamba_25.json").reduction_layers.size() == 1);
    CHECK(plan_of("nemotron62_attn_plus_1m_25.json").reduction_layers.size() == 13);
    CHECK(plan_of("nemotron62_attn_plus_2m_25.json").reduction_layers.size() == 20);
    CHECK(plan_of("nemotron62_sigmoid_25.json").reduction_layers.size() == 32);
}

TEST_CASE("a custom architecture document overrides the preset") {
    nlohmann::json cfg_json = {
        {"version", 1},
        {"preset", "tiny8"},
        {"n_visual", 64},
        {"m_text", 4},
        {"architecture", arch_to_json(build_preset("transformer-only-3"))},
    };
    const RunConfig cfg = run_config_from_json(cfg_json);
    CHECK(cfg.resolved_arch().num_layers == 6);
    CHECK(cfg.resolved_arch().count_of(LayerKind::Mamba) == 0);
    // echo keeps the override so reports stay self-describing
    CHECK(run_config_to_json(cfg).contains("architecture"));
    const ReductionReport report = run_prefill(cfg);
    CHECK(report.trace.size() == 6);
}
