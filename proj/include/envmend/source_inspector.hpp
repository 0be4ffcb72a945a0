// envmend/source_inspector.hpp - static import extraction and stdlib filtering
//
// A line-level scan, not a grammar-faithful parser: it recognizes
// `import a.b.c`, `import a as x, b`, `from a.b import c` (including indented
// ones), skips comments and triple-quoted blocks, and ignores relative
// imports. Dynamic imports (__import__, importlib) are out of scope.
#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "envmend/core_types.hpp"
#include "envmend/errors.hpp"

#include "json.hpp"

namespace envmend {

namespace detail {

inline std::string_view trim_view(std::string_view sv) {
    size_t b = 0, e = sv.size();
    while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
    return sv.substr(b, e - b);
}

inline bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Reads a dotted module path at `pos`; returns the first component, or empty
// when the text there is not a module path (e.g. a relative import).
inline std::string read_top_level(std::string_view text, size_t& pos) {
    if (pos >= text.size() || !is_ident_start(text[pos])) return {};
    size_t start = pos;
    while (pos < text.size() && is_ident_char(text[pos])) ++pos;
    std::string top(text.substr(start, pos - start));
    while (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && is_ident_char(text[pos])) ++pos;
    }
    return top;
}

}  // namespace detail

/// Every import mention in the file, deduplicated by top-level name in
/// first-occurrence order. Unparseable lines are skipped, never fatal.
inline std::vector<ImportMention> extract_imports(const SourceFile& file) {
    std::vector<ImportMention> out;
    std::set<std::string> seen;
    bool in_triple = false;
    std::string triple_quote;

    size_t line_no = 0;
    size_t start = 0;
    const std::string& text = file.content;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        std::string_view line(text.data() + start, (nl == std::string::npos ? text.size() : nl) - start);
        ++line_no;

        // Track triple-quoted blocks so docstring text never counts as code.
        bool code_line = !in_triple;
        for (size_t i = 0; i + 3 <= line.size();) {
            char c = line[i];
            if ((c == '"' || c == '\'') && line[i + 1] == c && line[i + 2] == c) {
                std::string tq(3, c);
                if (!in_triple) {
                    in_triple = true;
                    triple_quote = tq;
                } else if (tq == triple_quote) {
                    in_triple = false;
                }
                i += 3;
            } else {
                ++i;
            }
        }

        if (code_line) {
            std::string_view t = detail::trim_view(line);
            std::string top;
            std::vector<std::string> tops;
            if (t.rfind("import ", 0) == 0 || t == "import") {
                size_t pos = 6;
                while (pos < t.size()) {
                    while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
                    top = detail::read_top_level(t, pos);
                    if (top.empty()) break;
                    tops.push_back(top);
                    // skip "as alias"
                    while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
                    if (t.compare(pos, 3, "as ") == 0) {
                        pos += 3;
                        detail::read_top_level(t, pos);
                        while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
                    }
                    if (pos < t.size() && t[pos] == ',') {
                        ++pos;
                        continue;
                    }
                    break;
                }
            } else if (t.rfind("from ", 0) == 0) {
                size_t pos = 5;
                while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
                // relative imports have no top-level package to install
                if (pos < t.size() && t[pos] != '.') {
                    top = detail::read_top_level(t, pos);
                    while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
                    if (!top.empty() && t.compare(pos, 6, "import") == 0) tops.push_back(top);
                }
            }
            for (auto& name : tops) {
                if (seen.insert(name).second)
                    out.push_back(ImportMention{std::string(t), name, line_no});
            }
        }

        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Standard-library filtering
// ---------------------------------------------------------------------------

/// Per-series standard-library name lists loaded from the bundled data files
/// (data/stdlib/<series>.txt, newline-separated names).
class StdlibIndex {
public:
    static StdlibIndex load(const std::filesystem::path& stdlib_dir) {
        StdlibIndex idx;
        for (const auto& series : InterpreterVersion::supported()) {
            std::ifstream in(stdlib_dir / (series + ".txt"));
            if (!in) continue;
            std::set<std::string>& names = idx.by_series_[series];
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (!line.empty()) names.insert(line);
            }
        }
        return idx;
    }

    bool has_series(const std::string& series) const { return by_series_.count(series) != 0; }

    bool is_stdlib(const std::string& name, const InterpreterVersion& interp) const {
        auto it = by_series_.find(interp.series);
        if (it == by_series_.end()) throw UnsupportedInterpreterError(interp.series);
        return it->second.count(name) != 0;
    }

private:
    std::map<std::string, std::set<std::string>> by_series_;
};

/// Drops mentions whose top-level name is standard library for the series.
inline std::vector<ImportMention> filter_stdlib(const std::vector<ImportMention>& mentions,
                                                const InterpreterVersion& interpreter,
                                                const StdlibIndex& index) {
    if (!index.has_series(interpreter.series)) throw UnsupportedInterpreterError(interpreter.series);
    std::vector<ImportMention> out;
    for (const auto& m : mentions)
        if (!index.is_stdlib(m.top_level_name, interpreter)) out.push_back(m);
    return out;
}

/// Maps every mention to a requirement; never drops one.
inline std::vector<ModuleRequirement> to_requirements(const std::vector<ImportMention>& mentions,
                                                      const NameMapping& mapping) {
    std::vector<ModuleRequirement> out;
    out.reserve(mentions.size());
    for (const auto& m : mentions)
        out.push_back(ModuleRequirement{m.top_level_name, mapping.lookup(m.top_level_name), {}});
    return out;
}

/// Loads the curated mapping file (a flat JSON object of
/// import name -> install name).
inline NameMapping load_name_mapping(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read name mapping file: " + file.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    NameMapping mapping;
    for (auto& [key, value] : doc.items()) mapping.add(key, value.get<std::string>());
    return mapping;
}

}  // namespace envmend
