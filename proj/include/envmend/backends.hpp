// envmend/backends.hpp - text-generation backends
//
// Three implementations of TextBackend:
//  - HttpTextBackend   talks to a local model server (POST /api/generate,
//    the wire format documented in the README)
//  - TranscriptBackend replays recorded replies keyed by prompt id plus a
//    digest of the rendered bindings
//  - DeterministicStubBackend synthesizes schema-valid replies from the
//    prompt text itself; optionally seeded-random for stochastic runs
#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "envmend/llm_gateway.hpp"

#include "httplib.h"
#include "json.hpp"

namespace envmend {

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

struct HttpBackendConfig {
    std::string base_url = "http://localhost:11434";
    int timeout_seconds = 300;
};

class HttpTextBackend : public TextBackend {
public:
    explicit HttpTextBackend(HttpBackendConfig cfg = {}) : cfg_(std::move(cfg)) {}

    std::string generate(const GenerationRequest& req) override {
        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(cfg_.timeout_seconds, 0);

        nlohmann::json body = {
            {"model", req.model_name},
            {"prompt", req.rendered_prompt},
            {"stream", false},
            {"options", {{"temperature", req.temperature}}},
        };
        if (req.seed) body["options"]["seed"] = *req.seed;

        auto res = client.Post("/api/generate", body.dump(), "application/json");
        if (!res)
            throw BackendError("text backend unreachable at " + cfg_.base_url + ": " +
                               httplib::to_string(res.error()));
        if (res->status != 200)
            throw BackendError("text backend returned status " + std::to_string(res->status));
        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("response") || !doc["response"].is_string())
            throw BackendError("text backend reply body missing 'response' field");
        return doc["response"].get<std::string>();
    }

private:
    HttpBackendConfig cfg_;
};

// ---------------------------------------------------------------------------
// Transcript backend
// ---------------------------------------------------------------------------

/// Replays fixture replies. The transcript directory holds an index.json of
///   "<prompt_id>:<binding_digest>"  ->  reply | [reply, reply, ...]
/// A "<prompt_id>:*" entry answers any digest for that prompt. Values of the
/// form "@file:name" load the reply from a file next to the index. Array
/// entries are consumed per key in call order (the last one repeats).
class TranscriptBackend : public TextBackend {
public:
    explicit TranscriptBackend(const std::filesystem::path& dir) : dir_(dir) {
        std::ifstream in(dir / "index.json");
        if (!in) throw Error("transcript index not found: " + (dir / "index.json").string());
        index_ = nlohmann::json::parse(in);
    }

    explicit TranscriptBackend(nlohmann::json index) : index_(std::move(index)) {}

    std::string generate(const GenerationRequest& req) override {
        std::string exact = req.prompt_id + ":" + req.binding_digest;
        std::string wild = req.prompt_id + ":*";
        const nlohmann::json* entry = nullptr;
        std::string key = exact;
        if (index_.contains(exact)) {
            entry = &index_[exact];
        } else if (index_.contains(wild)) {
            entry = &index_[wild];
            key = wild;
        } else {
            throw BackendError("no transcript entry for '" + exact + "'");
        }
        std::string reply;
        if (entry->is_array()) {
            std::lock_guard<std::mutex> lock(mutex_);
            size_t& cursor = cursors_[key];
            size_t idx = cursor < entry->size() ? cursor : entry->size() - 1;
            ++cursor;
            reply = (*entry)[idx].get<std::string>();
        } else {
            reply = entry->get<std::string>();
        }
        if (reply.rfind("@file:", 0) == 0) {
            std::ifstream f(dir_ / reply.substr(6), std::ios::binary);
            if (!f) throw Error("transcript reply file missing: " + reply.substr(6));
            std::ostringstream buf;
            buf << f.rdbuf();
            reply = buf.str();
        }
        return reply;
    }

private:
    std::filesystem::path dir_;
    nlohmann::json index_;
    std::mutex mutex_;
    std::map<std::string, size_t> cursors_;
};

// ---------------------------------------------------------------------------
// Deterministic stub backend
// ---------------------------------------------------------------------------

struct StubConfig {
    std::string default_python = "3.6";
    bool stochastic = false;  // seeded-random version picks instead of the fixed schedule
    std::map<std::string, std::string> bare_versions;
    std::string fallback_bare_version = "1.0.0";
};

/// Plays the model's role offline: parses the rendered prompt, answers with
/// schema-valid JSON. Stateless per call, so concurrent use needs no locks
/// and replies depend only on the prompt (plus the seed in stochastic mode).
class DeterministicStubBackend : public TextBackend {
public:
    explicit DeterministicStubBackend(StubConfig cfg = {}) : cfg_(std::move(cfg)) {}

    std::string generate(const GenerationRequest& req) override {
        const std::string& p = req.rendered_prompt;
        if (req.prompt_id == "infer_file" || p.rfind("Given a python file:", 0) == 0)
            return infer_reply(p);
        if (req.prompt_id == "pick_version_rag" || p.find("Perform equally distanced sampling") != std::string::npos)
            return rag_reply(p, req.seed);
        if (req.prompt_id == "pick_version_bare" || p.rfind("Infer a possible working version", 0) == 0)
            return bare_reply(p);
        return triage_reply(req.prompt_id, p);
    }

private:
    static std::string slice(const std::string& text, const std::string& after,
                             const std::string& before) {
        size_t a = text.find(after);
        if (a == std::string::npos) return {};
        a += after.size();
        size_t b = text.find(before, a);
        if (b == std::string::npos) return text.substr(a);
        return text.substr(a, b - a);
    }

    std::string infer_reply(const std::string& prompt) const {
        std::string file = slice(prompt, "Given a python file:\n", "\nReturn a list of Python modules");
        nlohmann::json modules = nlohmann::json::array();
        std::set<std::string> seen;
        static const std::regex import_re(R"((?:^|\n)\s*(?:import|from)\s+([A-Za-z_][A-Za-z0-9_]*))");
        for (auto it = std::sregex_iterator(file.begin(), file.end(), import_re);
             it != std::sregex_iterator(); ++it) {
            std::string name = (*it)[1].str();
            if (seen.insert(name).second)
                modules.push_back({{"module", name}, {"version", ""}});
        }
        nlohmann::json doc = {{"python_modules", modules}, {"python_version", cfg_.default_python}};
        return doc.dump();
    }

    std::string rag_reply(const std::string& prompt, std::optional<int64_t> seed) const {
        std::string module = slice(prompt, "for the '", "' module");
        std::vector<std::string> catalog = detail::split_csv(slice(prompt, "newest:\n", "\nPerform"));
        std::vector<std::string> previous =
            detail::split_csv(slice(prompt, "previously used versions (", ")"));
        std::set<std::string> prev_set(previous.begin(), previous.end());
        std::vector<std::string> remaining;
        for (const auto& v : catalog)
            if (!prev_set.count(v)) remaining.push_back(v);
        if (remaining.empty()) remaining = catalog;  // gateway guards exhaustion before asking
        if (remaining.empty()) return R"({"module":"","version":""})";

        size_t idx;
        if (cfg_.stochastic) {
            uint64_t salt = fnv1a64(module + "|" + join(previous, ","));
            std::mt19937_64 rng(static_cast<uint64_t>(seed.value_or(0)) ^ salt);
            idx = std::uniform_int_distribution<size_t>(0, remaining.size() - 1)(rng);
        } else {
            idx = equal_distance_index(remaining.size(), previous.size());
        }
        nlohmann::json doc = {{"module", module}, {"version", remaining[idx]}};
        return doc.dump();
    }

    std::string bare_reply(const std::string& prompt) const {
        std::string module = slice(prompt, "working version of the '", "' module");
        auto it = cfg_.bare_versions.find(module);
        std::string version = it == cfg_.bare_versions.end() ? cfg_.fallback_bare_version : it->second;
        nlohmann::json doc = {{"module", module}, {"version", version}};
        return doc.dump();
    }

    std::string triage_reply(const std::string& prompt_id, const std::string& prompt) const {
        std::string msg = slice(prompt, ":\n", "\nIdentify");
        std::smatch m;
        nlohmann::json doc;
        static const std::regex from_re(R"(from '([^']+)')");
        static const std::regex nomod_re(R"(No module named '?([A-Za-z0-9_\.]+)'?)");
        static const std::regex vnf_re(R"(requirement ([A-Za-z0-9_.\-]+)==([^\s,()]+))");
        static const std::regex nodist_re(R"(No matching distribution found for ([A-Za-z0-9_.\-]+)==(\S+))");
        static const std::regex inv_re(R"('([A-Za-z0-9_.\-]+)==([^']+)')");
        static const std::regex conflict_re(R"(Cannot install ([^\s]+) and ([^\s]+) because)");
        static const std::regex attr_re(R"(module '([^']+)' has no attribute '([^']+)')");
        static const std::regex line_re(R"(line (\d+))");

        auto strip_pin = [](std::string name) {
            size_t eq = name.find("==");
            return eq == std::string::npos ? name : name.substr(0, eq);
        };

        if (prompt_id == "extract_import_error" || prompt_id == "triage_ModuleNotFound") {
            if (std::regex_search(msg, m, from_re))
                doc = {{"module", m[1].str()}};
            else if (std::regex_search(msg, m, nomod_re)) {
                std::string top = m[1].str();
                doc = {{"module", top.substr(0, top.find('.'))}};
            }
        } else if (prompt_id == "triage_VersionNotFound") {
            if (std::regex_search(msg, m, vnf_re) || std::regex_search(msg, m, nodist_re))
                doc = {{"module", m[1].str()}, {"requested_version", m[2].str()}};
        } else if (prompt_id == "triage_InvalidVersion") {
            if (std::regex_search(msg, m, inv_re))
                doc = {{"module", m[1].str()}, {"requested_version", m[2].str()}};
        } else if (prompt_id == "triage_DependencyConflict") {
            if (std::regex_search(msg, m, conflict_re))
                doc = {{"modules", {strip_pin(m[1].str()), strip_pin(m[2].str())}}};
        } else if (prompt_id == "triage_AttributeError") {
            if (std::regex_search(msg, m, attr_re))
                doc = {{"module", m[1].str()}, {"attribute", m[2].str()}};
        } else if (prompt_id == "triage_SyntaxError") {
            if (std::regex_search(msg, m, line_re)) doc = {{"line_number", m[1].str()}};
        }
        if (doc.is_null()) return "I cannot tell from this log.";
        return doc.dump();
    }

    StubConfig cfg_;
};

}  // namespace envmend
