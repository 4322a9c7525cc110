#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tangram/dataset.hpp"

namespace tangram {

struct Exemplar {
    std::string scene_id;
    std::string image_png;    // may be empty in text-only mode
    std::string answer_json;  // 2-decimal answer for the task's target fields
};

struct PromptBundle {
    std::string scene_id;
    int iteration = 1; // 1-based loop iteration
    std::string system_text;
    std::vector<Exemplar> exemplars;
    std::string target_image; // PNG bytes
    TaskMode mode = TaskMode::Pos;
    int piece_count = 1;
    std::optional<std::string> feedback_hint; // present from iteration 2 onward
    double temperature = 0.0;
    bool include_exemplar_images = true;
};

struct ProposalResponse {
    std::string raw_text;
    std::optional<FieldSet> parsed;
    std::optional<std::string> parse_error; // exactly one of parsed/parse_error is set
};

enum class BackendKind { Remote, NoisyOracle, Replay };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> backend_kind_from_string(std::string_view s);

struct OracleNoise {
    double sigma_pos = 0.0;   // canvas units
    double sigma_angle = 0.0; // degrees
    double sigma_size = 0.0;  // relative
    Vec2 bias_pos{0.0, 0.0};
    double bias_angle = 0.0;
    double bias_size = 0.0;
    // Positional noise contraction per iteration once a feedback hint is seen;
    // models "small correction" compliance. Simulator assumption, not a paper
    // quantity.
    double gamma = 0.7;
};

struct BackendConfig {
    BackendKind kind = BackendKind::NoisyOracle;
    // remote
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env = "TANGRAM_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_concurrent_requests = 4;
    double min_request_interval_s = 0.0;
    // noisy oracle
    OracleNoise noise;
    std::uint64_t seed = 0;
    // replay
    std::string trace_path;
};

// Verbatim request/response sink, used to persist remote traffic for replay.
using WireLog = std::function<void(const std::string& scene_id, int iteration,
                                   const std::string& request, const std::string& response)>;

class Backend {
public:
    virtual ~Backend() = default;
    virtual ProposalResponse propose(const PromptBundle& bundle) = 0;
    virtual std::string name() const = 0;
    virtual void set_wire_log(WireLog) {}
};

// Scene lookup the oracle backend answers from.
using AnnotationLookup = std::function<const SceneAnnotation*(const std::string& scene_id)>;

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg, AnnotationLookup gt_lookup);

std::string build_system_text(TaskMode mode, int piece_count);
// Exactly: previous IoU=<2 decimals>. Try a small correction (Dx, Dy).
std::string feedback_hint_text(double prev_best_iou);

// Seeded exemplar subsample + hint wiring. The pool must not contain the
// target scene; iteration 1 carries no hint. The exemplar draw depends on
// (seed, scene_id) only, so every iteration of a scene sees the same k pairs.
PromptBundle build_prompt(const TaskSpec& task, const std::vector<Exemplar>& exemplar_pool,
                          int k, int iteration, double prev_best_iou, std::uint64_t seed,
                          std::string target_image = {}, double temperature = 0.0,
                          bool include_exemplar_images = true);

// Total: extracts the first balanced JSON value (prose and code fences
// tolerated), validates the mode's target fields, normalizes angles into
// [0,360) and clamps positions into the canvas. Never throws.
ProposalResponse parse_response(std::string raw_text, TaskMode mode, int piece_count);

// GT answer JSON for exemplars/oracle. decimals < 0 keeps full precision.
std::string format_answer_json(const SceneAnnotation& a, TaskMode mode, int decimals);

// Serialized trace line for replay: {"scene_id", "iteration", "raw_text"}.
std::string trace_line(const std::string& scene_id, int iteration, const std::string& raw_text);

} // namespace tangram
