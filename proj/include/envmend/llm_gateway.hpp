// envmend/llm_gateway.hpp - structured access to a text-generation backend
//
// The gateway renders a template, submits it, and parses the reply against
// the expected JSON shape. Malformed replies are re-prompted up to a small
// budget; under retrieval mode a returned version is additionally validated
// against the supplied catalog and the exclusion list, with a deterministic
// equal-distance pick as the last resort.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "envmend/core_types.hpp"
#include "envmend/error_class.hpp"
#include "envmend/errors.hpp"
#include "envmend/prompts.hpp"

#include "json.hpp"

namespace envmend {

struct GenerationRequest {
    std::string model_name;
    double temperature = 0.7;
    std::string rendered_prompt;
    std::optional<int64_t> seed;

    // Filled in by the gateway; local stub backends key their transcripts on
    // these, HTTP backends ignore them.
    std::string prompt_id;
    std::string binding_digest;
};

/// A backend reply that validated against its schema.
struct StructuredReply {
    std::string schema_id;
    nlohmann::json payload;
    std::string raw_text;
};

/// Stage-A result: module names (with unused version hints) plus the
/// predicted interpreter.
struct InferredEnvironment {
    std::vector<std::pair<std::string, std::string>> python_modules;  // (module, version hint)
    std::string python_version;  // "major" or "major.minor"
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    /// Raw completion text. Throws BackendError when the service is unreachable.
    virtual std::string generate(const GenerationRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Reply parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

/// Pulls the first JSON object out of free-form reply text (models often wrap
/// the payload in prose or code fences).
inline std::optional<nlohmann::json> first_json_object(const std::string& text) {
    size_t start = 0;
    while ((start = text.find('{', start)) != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\')
                    ++i;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    auto doc = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!doc.is_discarded()) return doc;
                    break;
                }
            }
        }
        ++start;
    }
    return std::nullopt;
}

inline std::string trim_copy(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Reduces a free-text python version to "major" or "major.minor", if any.
inline std::optional<std::string> coerce_python_version(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        std::string out = text.substr(i, j - i);
        if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
            size_t k = j + 1;
            while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
            out += text.substr(j, k - j);
        }
        return out;
    }
    return std::nullopt;
}

inline std::string binding_digest(const std::map<std::string, std::string>& bindings) {
    std::string canon;
    for (const auto& [k, v] : bindings) {
        canon += k;
        canon += '=';
        canon += v;
        canon += '\n';
    }
    return fnv1a64_hex(canon);
}

inline std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= text.size()) {
        size_t comma = text.find(',', start);
        std::string part =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        part = trim_copy(part);
        if (!part.empty()) out.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Index of the next equal-distance sample over `remaining` admissible
/// versions, given how many were already used: the midpoint first, then
/// successively earlier fractions.
inline size_t equal_distance_index(size_t remaining, size_t previous_used) {
    if (remaining == 0) return 0;
    unsigned shift = previous_used >= 62 ? 62 : static_cast<unsigned>(previous_used) + 1;
    size_t idx = remaining >> shift;
    return idx >= remaining ? remaining - 1 : idx;
}

struct GatewayOptions {
    int retry_budget = 2;  // re-prompts after the first attempt
    std::string default_python = "3.6";
};

class Gateway {
public:
    explicit Gateway(TextBackend& backend, GatewayOptions options = {})
        : backend_(&backend), options_(options) {}

    const GatewayOptions& options() const { return options_; }

    /// Stage A: modules + interpreter straight from the source text.
    InferredEnvironment infer_environment(const SourceFile& file, GenerationRequest cfg) const {
        std::map<std::string, std::string> bindings = {{"raw_file", file.content},
                                                       {"format_instructions", kInferSchema}};
        StructuredReply reply = exchange("infer_file", bindings, cfg, [](const nlohmann::json& doc) {
            return doc.contains("python_modules") && doc["python_modules"].is_array();
        });

        InferredEnvironment env;
        for (const auto& item : reply.payload["python_modules"]) {
            std::string module, version;
            if (item.is_string()) {
                module = item.get<std::string>();
            } else if (item.is_object() && item.contains("module") && item["module"].is_string()) {
                module = item["module"].get<std::string>();
                if (item.contains("version") && item["version"].is_string())
                    version = item["version"].get<std::string>();
            }
            module = detail::trim_copy(module);
            if (!module.empty()) env.python_modules.emplace_back(module, version);
        }
        std::string pv;
        if (reply.payload.contains("python_version") && reply.payload["python_version"].is_string())
            pv = reply.payload["python_version"].get<std::string>();
        env.python_version = detail::coerce_python_version(pv).value_or(options_.default_python);
        return env;
    }

    /// Stage B: one version for one module. With a catalog present the result
    /// is guaranteed to be a catalog member outside `previous`.
    std::string pick_version(const ModuleRequirement& module,
                             const std::optional<std::string>& catalog_text,
                             const std::vector<std::string>& previous,
                             const InterpreterVersion& interpreter, GenerationRequest cfg) const {
        if (!catalog_text) return pick_version_bare(module, interpreter, cfg);

        std::vector<std::string> catalog = detail::split_csv(*catalog_text);
        std::set<std::string> catalog_set(catalog.begin(), catalog.end());
        std::set<std::string> previous_set(previous.begin(), previous.end());
        std::vector<std::string> remaining;
        for (const auto& v : catalog)
            if (!previous_set.count(v)) remaining.push_back(v);
        if (remaining.empty()) throw VersionsExhaustedError(module.install_name);

        std::map<std::string, std::string> bindings = {
            {"module_name", module.install_name},
            {"module_versions", *catalog_text},
            {"previous_versions", join(previous, ",")},
            {"format_instructions", kVersionSchema},
        };
        cfg.prompt_id = "pick_version_rag";
        cfg.binding_digest = detail::binding_digest(bindings);
        std::string base_prompt = render(prompt("pick_version_rag"), bindings);
        std::string current_prompt = base_prompt;

        std::string last_raw;
        bool any_parsed = false;
        for (int attempt = 0; attempt <= options_.retry_budget; ++attempt) {
            cfg.rendered_prompt = current_prompt;
            last_raw = backend_->generate(cfg);
            std::optional<std::string> version = parse_version_reply(last_raw);
            if (!version) {
                current_prompt = base_prompt;  // plain re-prompt on unparseable output
                continue;
            }
            any_parsed = true;
            if (catalog_set.count(*version) && !previous_set.count(*version)) return *version;
            current_prompt = base_prompt + "\nThe version '" + *version +
                             "' is not acceptable: it must be one of the given versions and not "
                             "among the previously used versions. Choose again.";
        }
        if (!any_parsed)
            throw MalformedReplyError("no parseable version reply for '" + module.install_name + "'",
                                      last_raw);
        // Constraint violations exhausted the budget: a deterministic
        // equal-distance pick keeps the loop moving.
        return remaining[equal_distance_index(remaining.size(), previous.size())];
    }

    /// Stage D fallback: ask the backend for the payload a triage class needs.
    std::map<std::string, std::string> extract_error_payload(ErrorClass cls,
                                                             const std::string& log_excerpt,
                                                             GenerationRequest cfg) const {
        std::string tmpl_id = triage_template_id(cls);
        if (tmpl_id.empty()) throw Error("no triage template for class " + to_string(cls));
        std::map<std::string, std::string> bindings = {{"error_msg", log_excerpt},
                                                       {"format_instructions", triage_schema(cls)}};
        StructuredReply reply =
            exchange(tmpl_id, bindings, cfg, [cls](const nlohmann::json& doc) {
                return !payload_from_json(cls, doc).empty();
            });
        return payload_from_json(cls, reply.payload);
    }

private:
    template <typename Pred>
    StructuredReply exchange(const std::string& template_id,
                             const std::map<std::string, std::string>& bindings,
                             GenerationRequest cfg, Pred schema_ok) const {
        cfg.prompt_id = template_id;
        cfg.binding_digest = detail::binding_digest(bindings);
        cfg.rendered_prompt = render(prompt(template_id), bindings);
        std::string last_raw;
        for (int attempt = 0; attempt <= options_.retry_budget; ++attempt) {
            last_raw = backend_->generate(cfg);
            auto doc = detail::first_json_object(last_raw);
            if (doc && schema_ok(*doc)) return StructuredReply{template_id, *doc, last_raw};
        }
        throw MalformedReplyError("backend reply never matched schema '" + template_id + "'",
                                  last_raw);
    }

    std::string pick_version_bare(const ModuleRequirement& module,
                                  const InterpreterVersion& interpreter,
                                  GenerationRequest cfg) const {
        std::map<std::string, std::string> bindings = {
            {"module_name", module.install_name},
            {"python_version", interpreter.series},
            {"format_instructions", kVersionSchema},
        };
        StructuredReply reply =
            exchange("pick_version_bare", bindings, cfg, [](const nlohmann::json& doc) {
                return doc.contains("version") && doc["version"].is_string() &&
                       !detail::trim_copy(doc["version"].get<std::string>()).empty();
            });
        return detail::trim_copy(reply.payload["version"].get<std::string>());
    }

    static std::optional<std::string> parse_version_reply(const std::string& raw) {
        auto doc = detail::first_json_object(raw);
        if (!doc) return std::nullopt;
        if (doc->contains("version") && (*doc)["version"].is_string()) {
            std::string v = detail::trim_copy((*doc)["version"].get<std::string>());
            if (!v.empty()) return v;
        }
        return std::nullopt;
    }

    /// Flattens a schema-shaped JSON doc into the payload map for a class;
    /// empty result means the doc was unusable.
    static std::map<std::string, std::string> payload_from_json(ErrorClass cls,
                                                                const nlohmann::json& doc) {
        auto str = [&doc](const char* key) -> std::string {
            if (!doc.contains(key)) return {};
            const auto& v = doc[key];
            if (v.is_string()) return detail::trim_copy(v.get<std::string>());
            if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
            return {};
        };
        std::map<std::string, std::string> out;
        switch (cls) {
            case ErrorClass::ImportError:
            case ErrorClass::ModuleNotFound: {
                std::string m = str("module");
                if (!m.empty()) out["module"] = m;
                break;
            }
            case ErrorClass::VersionNotFound:
            case ErrorClass::InvalidVersion: {
                std::string m = str("module"), v = str("requested_version");
                if (v.empty()) v = str("version");
                if (!m.empty() && !v.empty()) {
                    out["module"] = m;
                    out["requested_version"] = v;
                }
                break;
            }
            case ErrorClass::DependencyConflict: {
                if (doc.contains("modules") && doc["modules"].is_array()) {
                    std::vector<std::string> names;
                    for (const auto& item : doc["modules"])
                        if (item.is_string() && !item.get<std::string>().empty())
                            names.push_back(item.get<std::string>());
                    if (names.size() >= 2) out["conflicting_modules"] = join(names, ",");
                }
                break;
            }
            case ErrorClass::AttributeError: {
                std::string m = str("module"), a = str("attribute");
                if (!m.empty() && !a.empty()) {
                    out["module"] = m;
                    out["attribute"] = a;
                }
                break;
            }
            case ErrorClass::SyntaxError: {
                std::string n = str("line_number");
                if (!n.empty()) out["line_number"] = n;
                break;
            }
            case ErrorClass::NonZeroCode: break;
        }
        return out;
    }

    TextBackend* backend_;
    GatewayOptions options_;
};

}  // namespace envmend
