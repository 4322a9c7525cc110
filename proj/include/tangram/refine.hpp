#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tangram/dataset.hpp"
#include "tangram/proposal.hpp"

namespace tangram {

struct RewardParams {
    double lambda = 0.1;      // position-penalty weight, > 0
    int dilation_px = 1;      // for the IoU term
    int resolution = kDefaultResolution;
    // Optional extra penalty terms (off by default; the reward uses position
    // only even in `all` mode).
    double angle_penalty = 0.0; // weight on angle error / 180
    double size_penalty = 0.0;  // weight on relative size error
};

struct LoopConfig {
    int max_iterations = 6;          // T
    double tau = 0.9;                // early-stop IoU threshold
    int k = 15;                      // ICL window, 0 disables exemplars
    double temperature = 0.0;
    bool local_search_enabled = true;
    std::uint64_t seed = 0;
    int parse_failure_budget = 3;    // consecutive failures before aborting
    bool include_exemplar_images = true;
};

// Single-shot protocol: one proposal, no hint, no local search.
LoopConfig single_shot_config(const LoopConfig& base);

struct RewardBreakdown {
    double reward = 0.0;
    double iou = 0.0;
    double l2 = 0.0; // mean positional error over predicted pieces; 0 when fixed
};

// R = IoU - lambda * l2 / 10 against the scene's ground truth. Fields absent
// from the candidate are fixed at their GT values.
RewardBreakdown reward(const FieldSet& candidate, const SceneAnnotation& gt,
                       const RewardParams& params);

struct IterationEntry {
    int iteration = 0;
    std::string raw_text;
    bool parse_failed = false;
    std::string parse_error;
    FieldSet fields;
    double iou = 0.0;
    double reward = 0.0;
    double l2 = 0.0;
    bool accepted_as_best = false;
    bool feedback_hint_used = false;
    double best_iou_after = 0.0;
    double best_reward_after = 0.0;
};

struct LocalSearchEntry {
    double step = 0.0;
    int piece_index = 0;
    Vec2 offset;       // accepted move, canvas units
    double iou = 0.0;  // after the move
    bool accepted = false;
};

enum class StopReason { Threshold, Exhausted, ParseFailureBudget };
std::string_view to_string(StopReason r);

struct RefineTrace {
    std::vector<IterationEntry> iterations;
    std::vector<LocalSearchEntry> local_search_steps;
    StopReason stop_reason = StopReason::Exhausted;
    bool local_search_ran = false;
    double final_iou = 0.0;
    double final_reward = 0.0;
};

nlohmann::json trace_entry_to_json(const IterationEntry& e);
nlohmann::json trace_to_json(const RefineTrace& t);

struct RefineResult {
    bool has_best = false;
    FieldSet best_fields;
    double best_iou = 0.0;
    double best_reward = 0.0;
    RefineTrace trace;
};

// Alg.-style verifier-refiner loop: propose, parse, score, keep the highest
// reward, hint from iteration 2, early-stop once best IoU >= tau, then local
// search when the mode involves position and the threshold was not reached.
RefineResult refine_loop(const TaskSpec& task, const SceneAnnotation& gt, Backend& backend,
                         const std::vector<Exemplar>& exemplar_pool, const LoopConfig& loop,
                         const RewardParams& params, const std::string& target_image = {});

struct LocalSearchResult {
    FieldSet fields;
    double iou = 0.0;
    std::vector<LocalSearchEntry> steps;
};

// Deterministic 3x3 positional hill climb at step sizes 0.6 -> 0.3 -> 0.15:
// first IoU-increasing neighbour is taken, the scan repeats at the same step
// until no neighbour improves, then the step shrinks. Position only.
LocalSearchResult local_search(const FieldSet& start, const SceneAnnotation& gt,
                               const TaskSpec& task, const RewardParams& params);

} // namespace tangram
