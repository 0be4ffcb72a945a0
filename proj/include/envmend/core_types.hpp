// envmend/core_types.hpp - domain values shared across the pipeline
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "envmend/errors.hpp"

namespace envmend {

// ---------------------------------------------------------------------------
// Interpreter series
// ---------------------------------------------------------------------------

/// A supported interpreter series ("2.7", "3.4" ... "3.12").
struct InterpreterVersion {
    std::string series;

    static const std::vector<std::string>& supported() {
        static const std::vector<std::string> s = {"2.7", "3.4", "3.5",  "3.6",  "3.7",
                                                   "3.8", "3.9", "3.10", "3.11", "3.12"};
        return s;
    }

    static bool is_supported(const std::string& series) {
        const auto& s = supported();
        return std::find(s.begin(), s.end(), series) != s.end();
    }

    static InterpreterVersion checked(std::string series) {
        if (!is_supported(series)) throw UnsupportedInterpreterError(series);
        return InterpreterVersion{std::move(series)};
    }

    friend bool operator==(const InterpreterVersion& a, const InterpreterVersion& b) {
        return a.series == b.series;
    }
    friend bool operator<(const InterpreterVersion& a, const InterpreterVersion& b) {
        auto key = [](const std::string& s) {
            size_t dot = s.find('.');
            return std::pair<int, int>(std::stoi(s.substr(0, dot)), std::stoi(s.substr(dot + 1)));
        };
        return key(a.series) < key(b.series);
    }
};

// ---------------------------------------------------------------------------
// Source file and import mentions
// ---------------------------------------------------------------------------

/// Opaque text of the program under repair. Never executed locally.
struct SourceFile {
    std::filesystem::path path;
    std::string content;
    size_t line_count = 0;

    static SourceFile read(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error("cannot read source file: " + p.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        SourceFile f{p, buf.str(), 0};
        f.line_count = static_cast<size_t>(std::count(f.content.begin(), f.content.end(), '\n'));
        if (!f.content.empty() && f.content.back() != '\n') ++f.line_count;
        return f;
    }

    static SourceFile from_text(std::string text, std::filesystem::path p = "snippet.py") {
        SourceFile f{std::move(p), std::move(text), 0};
        f.line_count = static_cast<size_t>(std::count(f.content.begin(), f.content.end(), '\n'));
        if (!f.content.empty() && f.content.back() != '\n') ++f.line_count;
        return f;
    }
};

/// One import statement found in the source, reduced to its top-level name.
struct ImportMention {
    std::string raw_statement;
    std::string top_level_name;
    size_t line_number = 0;  // 1-based
};

/// Curated import-name -> install-name map; unmapped names pass through.
class NameMapping {
public:
    NameMapping() = default;
    explicit NameMapping(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

    std::string lookup(const std::string& import_name) const {
        auto it = entries_.find(import_name);
        return it == entries_.end() ? import_name : it->second;
    }

    void add(std::string import_name, std::string install_name) {
        entries_[std::move(import_name)] = std::move(install_name);
    }

    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;  // exact, case-sensitive keys
};

// ---------------------------------------------------------------------------
// Requirements and candidates
// ---------------------------------------------------------------------------

/// One third-party dependency; version stays unset until pinning.
struct ModuleRequirement {
    std::string import_name;
    std::string install_name;
    std::optional<std::string> version;

    friend bool operator==(const ModuleRequirement& a, const ModuleRequirement& b) {
        return a.import_name == b.import_name && a.install_name == b.install_name &&
               a.version == b.version;
    }
};

/// One testable hypothesis: interpreter series plus fully pinned modules.
/// Pins stay sorted by install name; the canonical key is the dedup identity.
struct EnvironmentCandidate {
    InterpreterVersion interpreter;
    std::vector<ModuleRequirement> pins;

    static EnvironmentCandidate make(InterpreterVersion interp, std::vector<ModuleRequirement> pins) {
        EnvironmentCandidate c{std::move(interp), std::move(pins)};
        std::sort(c.pins.begin(), c.pins.end(),
                  [](const ModuleRequirement& a, const ModuleRequirement& b) {
                      return a.install_name < b.install_name;
                  });
        for (size_t i = 0; i < c.pins.size(); ++i) {
            const auto& p = c.pins[i];
            if (!p.version || p.version->empty())
                throw Error("candidate pin missing version: " + p.install_name);
            if (i && p.install_name == c.pins[i - 1].install_name)
                throw Error("duplicate pin: " + p.install_name);
        }
        return c;
    }

    std::string canonical_key() const {
        std::string key = interpreter.series + "|";
        for (size_t i = 0; i < pins.size(); ++i) {
            if (i) key += ';';
            key += pins[i].install_name + "==" + pins[i].version.value_or("");
        }
        return key;
    }

    const ModuleRequirement* find_pin(const std::string& install_name) const {
        for (const auto& p : pins)
            if (p.install_name == install_name) return &p;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Attempt history
// ---------------------------------------------------------------------------

/// Record of every candidate key and per-module version already tried within
/// one repair call. Append-only; single writer.
class AttemptHistory {
public:
    bool contains(const std::string& canonical_key) const {
        return tried_candidates_.count(canonical_key) != 0;
    }

    void record_candidate(const EnvironmentCandidate& c) {
        tried_candidates_.insert(c.canonical_key());
        for (const auto& p : c.pins) record_version(p.install_name, c.interpreter, *p.version);
    }

    void record_version(const std::string& install_name, const InterpreterVersion& interp,
                        const std::string& version) {
        auto& slot = tried_versions_[{install_name, interp.series}];
        if (slot.seen.insert(version).second) slot.order.push_back(version);
    }

    /// Versions tried for (module, interpreter), in first-tried order.
    std::vector<std::string> tried_versions(const std::string& install_name,
                                            const InterpreterVersion& interp) const {
        auto it = tried_versions_.find({install_name, interp.series});
        return it == tried_versions_.end() ? std::vector<std::string>{} : it->second.order;
    }

    size_t candidate_count() const { return tried_candidates_.size(); }
    const std::set<std::string>& tried_candidates() const { return tried_candidates_; }

    size_t iteration() const { return iteration_; }
    void bump_iteration() { ++iteration_; }

private:
    struct VersionSlot {
        std::set<std::string> seen;
        std::vector<std::string> order;
    };
    std::set<std::string> tried_candidates_;
    std::map<std::pair<std::string, std::string>, VersionSlot> tried_versions_;
    size_t iteration_ = 0;
};

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace envmend
