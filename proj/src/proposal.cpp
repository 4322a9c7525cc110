#include "tangram/proposal.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tangram/util.hpp"

namespace tangram {

namespace {

constexpr std::uint64_t kExemplarLane = 0xec5a;
constexpr std::uint64_t kOracleLane = 0x0a1c;

std::string format_number(double v, int decimals) {
    if (decimals < 0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    return format_double(v, decimals);
}

std::string piece_answer_json(const PieceFields& pf, int decimals) {
    std::string out = "{";
    bool first = true;
    auto field = [&](const char* name, const std::string& value) {
        if (!first) {
            out += ", ";
        }
        first = false;
        out += '"';
        out += name;
        out += "\": ";
        out += value;
    };
    if (pf.pos) {
        field("pos", "[" + format_number(pf.pos->x, decimals) + ", " +
                         format_number(pf.pos->y, decimals) + "]");
    }
    if (pf.angle) {
        field("angle", format_number(*pf.angle, decimals));
    }
    if (pf.size) {
        field("size", format_number(*pf.size, decimals));
    }
    out += "}";
    return out;
}

std::string fields_answer_json(const FieldSet& f, int decimals) {
    if (f.pieces.size() == 1) {
        return piece_answer_json(f.pieces[0], decimals);
    }
    std::string out = "{\"pieces\": [";
    for (size_t i = 0; i < f.pieces.size(); ++i) {
        if (i) {
            out += ", ";
        }
        out += piece_answer_json(f.pieces[i], decimals);
    }
    out += "]}";
    return out;
}

// --- response parsing -------------------------------------------------------

// End offset (one past) of the balanced JSON value opening at s[start], or
// npos when it never closes.
size_t balanced_end(std::string_view s, size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            --depth;
            if (depth == 0) {
                return i + 1;
            }
            if (depth < 0) {
                return std::string_view::npos;
            }
        }
    }
    return std::string_view::npos;
}

bool number_of(const nlohmann::json& v, double& out) {
    if (v.is_number()) {
        out = v.get<double>();
        return std::isfinite(out);
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        char* end = nullptr;
        out = std::strtod(s.c_str(), &end);
        if (end == s.c_str()) {
            return false;
        }
        while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) {
            ++end;
        }
        return *end == '\0' && std::isfinite(out);
    }
    return false;
}

struct FieldExtraction {
    std::optional<FieldSet> fields;
    std::string error;
};

FieldExtraction extract_piece(const nlohmann::json& obj, TaskMode mode, PieceFields& pf,
                              bool& clamped) {
    if (!obj.is_object()) {
        return {std::nullopt, "piece entry is not a JSON object"};
    }
    if (mode_has_position(mode)) {
        if (!obj.contains("pos")) {
            return {std::nullopt, "missing field: pos"};
        }
        const auto& v = obj["pos"];
        if (!v.is_array() || v.size() != 2) {
            return {std::nullopt, "wrong arity: pos must be [x, y]"};
        }
        double x = 0.0;
        double y = 0.0;
        if (!number_of(v[0], x) || !number_of(v[1], y)) {
            return {std::nullopt, "non-numeric: pos"};
        }
        const double cx = std::clamp(x, 0.0, kCanvasSide);
        const double cy = std::clamp(y, 0.0, kCanvasSide);
        if (cx != x || cy != y) {
            clamped = true;
        }
        pf.pos = Vec2{cx, cy};
    }
    if (mode_has_angle(mode)) {
        if (!obj.contains("angle")) {
            return {std::nullopt, "missing field: angle"};
        }
        double a = 0.0;
        if (!number_of(obj["angle"], a)) {
            return {std::nullopt, "non-numeric: angle"};
        }
        pf.angle = wrap_angle_deg(a);
    }
    if (mode_has_size(mode)) {
        if (!obj.contains("size")) {
            return {std::nullopt, "missing field: size"};
        }
        double s = 0.0;
        if (!number_of(obj["size"], s)) {
            return {std::nullopt, "non-numeric: size"};
        }
        if (!(s > 0.0)) {
            return {std::nullopt, "non-positive size"};
        }
        pf.size = s;
    }
    return {FieldSet{}, ""};
}

FieldExtraction fields_from_json(const nlohmann::json& j, TaskMode mode, int piece_count) {
    std::vector<nlohmann::json> piece_objs;
    if (j.is_array()) {
        piece_objs.assign(j.begin(), j.end());
    } else if (j.is_object() && j.contains("pieces")) {
        const auto& p = j["pieces"];
        if (!p.is_array()) {
            return {std::nullopt, "wrong arity: pieces must be an array"};
        }
        piece_objs.assign(p.begin(), p.end());
    } else if (j.is_object()) {
        if (piece_count == 1) {
            piece_objs.push_back(j);
        } else {
            // Field-major layout: {"pos": [[x,y],[x,y]], "angle": [a, b]}.
            piece_objs.assign(piece_count, nlohmann::json::object());
            for (const std::string& name : target_field_names(mode)) {
                if (!j.contains(name)) {
                    return {std::nullopt, "missing field: " + name};
                }
                const auto& v = j[name];
                if (!v.is_array() || static_cast<int>(v.size()) != piece_count) {
                    return {std::nullopt, "wrong arity: " + name + " needs one entry per piece"};
                }
                for (int k = 0; k < piece_count; ++k) {
                    piece_objs[static_cast<size_t>(k)][name] = v[static_cast<size_t>(k)];
                }
            }
        }
    } else {
        return {std::nullopt, "response JSON is not an object"};
    }

    if (static_cast<int>(piece_objs.size()) != piece_count) {
        return {std::nullopt, "wrong arity: expected " + std::to_string(piece_count) +
                                  " piece(s), got " + std::to_string(piece_objs.size())};
    }

    FieldSet out;
    out.pieces.resize(piece_objs.size());
    for (size_t i = 0; i < piece_objs.size(); ++i) {
        const FieldExtraction fe =
            extract_piece(piece_objs[i], mode, out.pieces[i], out.clamped);
        if (!fe.fields) {
            return fe;
        }
    }
    return {out, ""};
}

} // namespace

std::string_view to_string(BackendKind k) {
    switch (k) {
        case BackendKind::Remote: return "remote";
        case BackendKind::NoisyOracle: return "oracle";
        case BackendKind::Replay: return "replay";
    }
    return "unknown";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
    if (s == "remote") return BackendKind::Remote;
    if (s == "oracle" || s == "noisy-oracle") return BackendKind::NoisyOracle;
    if (s == "replay") return BackendKind::Replay;
    return std::nullopt;
}

std::string build_system_text(TaskMode mode, int piece_count) {
    std::string text =
        "You solve tangram placement tasks. The attached image shows the target "
        "silhouette on a [0,10]x[0,10] canvas; x runs right and y runs down from "
        "the top-left corner. Angles are degrees counter-clockwise in [0,360); "
        "size is a positive multiplier on the canonical piece. ";
    switch (mode) {
        case TaskMode::Pos:
            text += "Respond with minimal JSON: {\"pos\": [x, y]}.";
            break;
        case TaskMode::Angle:
            text += "Respond with minimal JSON: {\"angle\": a}.";
            break;
        case TaskMode::Size:
            text += "Respond with minimal JSON: {\"size\": s}.";
            break;
        case TaskMode::All:
            text += "Respond with minimal JSON: {\"pos\": [x, y], \"angle\": a, \"size\": s}.";
            break;
        case TaskMode::TwoPos:
            text += "Respond with minimal JSON: {\"pieces\": [{\"pos\": [x, y]}, "
                    "{\"pos\": [x, y]}]}.";
            break;
        case TaskMode::TwoAngle:
            text += "Respond with minimal JSON: {\"pieces\": [{\"angle\": a}, {\"angle\": b}]}.";
            break;
        case TaskMode::TwoPosAngle:
            text += "Respond with minimal JSON: {\"pieces\": [{\"pos\": [x, y], \"angle\": a}, "
                    "{\"pos\": [x, y], \"angle\": b}]}.";
            break;
    }
    if (piece_count == 2) {
        text += " List the pieces in the order they are described.";
    }
    text += " Output only the JSON.";
    return text;
}

std::string feedback_hint_text(double prev_best_iou) {
    return "previous IoU=" + format_double(prev_best_iou, 2) +
           ". Try a small correction (Δx, Δy).";
}

PromptBundle build_prompt(const TaskSpec& task, const std::vector<Exemplar>& exemplar_pool,
                          int k, int iteration, double prev_best_iou, std::uint64_t seed,
                          std::string target_image, double temperature,
                          bool include_exemplar_images) {
    if (k < 0 || static_cast<size_t>(k) > exemplar_pool.size()) {
        throw std::invalid_argument("k exceeds the exemplar pool size");
    }
    for (const Exemplar& e : exemplar_pool) {
        if (e.scene_id == task.scene_id) {
            throw std::invalid_argument("exemplar pool contains the target scene " +
                                        task.scene_id);
        }
    }

    PromptBundle bundle;
    bundle.scene_id = task.scene_id;
    bundle.iteration = iteration;
    bundle.mode = task.mode;
    bundle.piece_count = task.piece_count;
    bundle.system_text = build_system_text(task.mode, task.piece_count);
    bundle.target_image = std::move(target_image);
    bundle.temperature = temperature;
    bundle.include_exemplar_images = include_exemplar_images;

    // Same draw for every iteration of a scene: the ICL set is sampled once.
    std::mt19937_64 rng(stream_seed(seed, task.scene_id, kExemplarLane));
    std::vector<size_t> idx(exemplar_pool.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    for (int i = 0; i < k; ++i) {
        const size_t j =
            i + std::uniform_int_distribution<size_t>(0, idx.size() - 1 - i)(rng);
        std::swap(idx[static_cast<size_t>(i)], idx[j]);
        bundle.exemplars.push_back(exemplar_pool[idx[static_cast<size_t>(i)]]);
    }

    if (iteration >= 2) {
        bundle.feedback_hint = feedback_hint_text(prev_best_iou);
    }
    return bundle;
}

ProposalResponse parse_response(std::string raw_text, TaskMode mode, int piece_count) {
    ProposalResponse resp;
    resp.raw_text = std::move(raw_text);
    const std::string& s = resp.raw_text;

    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '{' && s[i] != '[') {
            continue;
        }
        const size_t end = balanced_end(s, i);
        if (end == std::string_view::npos) {
            continue;
        }
        const nlohmann::json j =
            nlohmann::json::parse(s.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) {
            continue;
        }
        // First parseable balanced value decides the outcome.
        FieldExtraction fe = fields_from_json(j, mode, piece_count);
        if (fe.fields) {
            resp.parsed = std::move(*fe.fields);
        } else {
            resp.parse_error = fe.error;
        }
        return resp;
    }
    resp.parse_error = "no JSON found";
    return resp;
}

std::string format_answer_json(const SceneAnnotation& a, TaskMode mode, int decimals) {
    return fields_answer_json(gt_fields(a, mode), decimals);
}

std::string trace_line(const std::string& scene_id, int iteration, const std::string& raw_text) {
    const nlohmann::json j{
        {"scene_id", scene_id}, {"iteration", iteration}, {"raw_text", raw_text}};
    return j.dump();
}

// --- backends ---------------------------------------------------------------

namespace {

class NoisyOracleBackend final : public Backend {
public:
    NoisyOracleBackend(BackendConfig cfg, AnnotationLookup lookup)
        : cfg_(std::move(cfg)), lookup_(std::move(lookup)) {}

    ProposalResponse propose(const PromptBundle& bundle) override {
        if (!lookup_) {
            throw std::runtime_error("oracle backend has no annotation lookup");
        }
        const SceneAnnotation* gt = lookup_(bundle.scene_id);
        if (gt == nullptr) {
            throw std::runtime_error("oracle backend has no ground truth for scene " +
                                     bundle.scene_id);
        }

        // Noise streams are keyed by (seed, scene id, iteration), never by
        // call order, so concurrent scenes stay deterministic and ablation
        // cells share base draws.
        std::mt19937_64 rng(stream_seed(cfg_.seed, bundle.scene_id, kOracleLane,
                                        static_cast<std::uint64_t>(bundle.iteration)));
        std::normal_distribution<double> gauss(0.0, 1.0);

        const OracleNoise& n = cfg_.noise;
        const double pos_scale =
            bundle.feedback_hint
                ? n.sigma_pos * std::pow(n.gamma, static_cast<double>(bundle.iteration - 1))
                : n.sigma_pos;

        FieldSet fields = gt_fields(*gt, bundle.mode);
        for (PieceFields& pf : fields.pieces) {
            const double zx = gauss(rng);
            const double zy = gauss(rng);
            const double za = gauss(rng);
            const double zs = gauss(rng);
            if (pf.pos) {
                pf.pos = Vec2{pf.pos->x + n.bias_pos.x + zx * pos_scale,
                              pf.pos->y + n.bias_pos.y + zy * pos_scale};
            }
            if (pf.angle) {
                pf.angle = wrap_angle_deg(*pf.angle + n.bias_angle + za * n.sigma_angle);
            }
            if (pf.size) {
                pf.size = std::max(1e-3, *pf.size * (1.0 + n.bias_size + zs * n.sigma_size));
            }
        }
        const std::string raw = fields_answer_json(fields, /*decimals=*/-1);
        return parse_response(raw, bundle.mode, bundle.piece_count);
    }

    std::string name() const override { return "oracle"; }

private:
    BackendConfig cfg_;
    AnnotationLookup lookup_;
};

class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(const BackendConfig& cfg) {
        std::ifstream in(cfg.trace_path);
        if (!in) {
            throw std::runtime_error("cannot open trace file: " + cfg.trace_path);
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const nlohmann::json j = nlohmann::json::parse(line);
            entries_[{j.at("scene_id").get<std::string>(), j.at("iteration").get<int>()}] =
                j.at("raw_text").get<std::string>();
        }
    }

    ProposalResponse propose(const PromptBundle& bundle) override {
        const auto it = entries_.find({bundle.scene_id, bundle.iteration});
        if (it == entries_.end()) {
            throw std::runtime_error("replay trace has no entry for scene " + bundle.scene_id +
                                     " iteration " + std::to_string(bundle.iteration));
        }
        return parse_response(it->second, bundle.mode, bundle.piece_count);
    }

    std::string name() const override { return "replay"; }

private:
    std::map<std::pair<std::string, int>, std::string> entries_;
};

class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint_url.empty() || cfg_.model_name.empty()) {
            throw std::invalid_argument("remote backend requires endpoint URL and model name");
        }
        split_url(cfg_.endpoint_url, base_, path_);
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
            api_key_ = key;
        }
        slots_ = std::max(1, cfg_.max_concurrent_requests);
    }

    ProposalResponse propose(const PromptBundle& bundle) override {
        const std::string body = request_body(bundle);
        std::string response_body;
        std::string last_error;

        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                // Exponential backoff: 0.5s, 1s, 2s, ... capped at 8s.
                const double delay = std::min(8.0, 0.5 * std::pow(2.0, attempt - 1));
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            const SlotGuard guard(*this);
            httplib::Client client(base_);
            client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            httplib::Headers headers;
            if (!api_key_.empty()) {
                headers.emplace("Authorization", "Bearer " + api_key_);
            }
            auto res = client.Post(path_, headers, body, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw std::runtime_error("remote endpoint returned HTTP " +
                                         std::to_string(res->status) + ": " + res->body);
            }
            response_body = res->body;
            break;
        }
        if (response_body.empty()) {
            throw std::runtime_error("remote request failed after " +
                                     std::to_string(cfg_.max_retries + 1) +
                                     " attempts: " + last_error);
        }
        if (wire_log_) {
            wire_log_(bundle.scene_id, bundle.iteration, body, response_body);
        }

        const nlohmann::json j = nlohmann::json::parse(response_body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
            throw std::runtime_error("remote endpoint returned an unexpected payload");
        }
        const std::string content =
            j["choices"][0].at("message").at("content").get<std::string>();
        return parse_response(content, bundle.mode, bundle.piece_count);
    }

    std::string name() const override { return "remote:" + cfg_.model_name; }

    void set_wire_log(WireLog log) override { wire_log_ = std::move(log); }

private:
    struct SlotGuard {
        explicit SlotGuard(RemoteBackend& b) : backend(b) { backend.throttle(); }
        ~SlotGuard() { backend.release_slot(); }
        RemoteBackend& backend;
    };

    static void split_url(const std::string& url, std::string& base, std::string& path) {
        const size_t scheme = url.find("://");
        if (scheme == std::string::npos) {
            throw std::invalid_argument("endpoint URL needs a scheme: " + url);
        }
        const size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) {
            base = url;
            path = "/";
        } else {
            base = url.substr(0, slash);
            path = url.substr(slash);
        }
    }

    std::string request_body(const PromptBundle& bundle) const {
        nlohmann::json content = nlohmann::json::array();
        auto add_text = [&content](const std::string& text) {
            content.push_back({{"type", "text"}, {"text", text}});
        };
        auto add_image = [&content](const std::string& png) {
            content.push_back(
                {{"type", "image_url"},
                 {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
        };

        for (size_t i = 0; i < bundle.exemplars.size(); ++i) {
            const Exemplar& e = bundle.exemplars[i];
            add_text("Example " + std::to_string(i + 1) + ":");
            if (bundle.include_exemplar_images && !e.image_png.empty()) {
                add_image(e.image_png);
            }
            add_text("Answer: " + e.answer_json);
        }
        add_text("Target:");
        if (!bundle.target_image.empty()) {
            add_image(bundle.target_image);
        }
        std::string instruction = "Output the JSON now.";
        if (bundle.feedback_hint) {
            instruction = *bundle.feedback_hint + " " + instruction;
        }
        add_text(instruction);

        const nlohmann::json body{
            {"model", cfg_.model_name},
            {"temperature", bundle.temperature},
            {"messages",
             {{{"role", "system"}, {"content", bundle.system_text}},
              {{"role", "user"}, {"content", content}}}},
        };
        return body.dump();
    }

    void throttle() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return in_flight_ < slots_; });
        ++in_flight_;
        if (cfg_.min_request_interval_s > 0.0) {
            const auto now = std::chrono::steady_clock::now();
            const auto interval =
                std::chrono::duration<double>(cfg_.min_request_interval_s);
            if (last_request_ != std::chrono::steady_clock::time_point{} &&
                now < last_request_ + interval) {
                const auto wait = last_request_ + interval - now;
                lock.unlock();
                std::this_thread::sleep_for(wait);
                lock.lock();
            }
            last_request_ = std::chrono::steady_clock::now();
        }
    }

    void release_slot() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            --in_flight_;
        }
        cv_.notify_one();
    }

    BackendConfig cfg_;
    std::string base_;
    std::string path_;
    std::string api_key_;
    int slots_ = 1;
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    std::chrono::steady_clock::time_point last_request_{};
    WireLog wire_log_;
};

} // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg, AnnotationLookup gt_lookup) {
    switch (cfg.kind) {
        case BackendKind::NoisyOracle:
            return std::make_unique<NoisyOracleBackend>(cfg, std::move(gt_lookup));
        case BackendKind::Replay:
            return std::make_unique<ReplayBackend>(cfg);
        case BackendKind::Remote:
            return std::make_unique<RemoteBackend>(cfg);
    }
    throw std::invalid_argument("unknown backend kind");
}

} // namespace tangram
