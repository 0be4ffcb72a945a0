// envmend/prompts.hpp - prompt templates and pure-text rendering
//
// Each template carries named {placeholder} markers. Rendering substitutes
// binding text verbatim (no escaping) and demands an exact binding set, so a
// stale call site fails loudly instead of sending a half-filled prompt.
#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "envmend/error_class.hpp"
#include "envmend/errors.hpp"

namespace envmend {

struct PromptTemplate {
    std::string id;
    std::string body;
    std::set<std::string> placeholders;

    static PromptTemplate make(std::string id, std::string body) {
        PromptTemplate t{std::move(id), std::move(body), {}};
        size_t pos = 0;
        while ((pos = t.body.find('{', pos)) != std::string::npos) {
            size_t end = t.body.find('}', pos);
            if (end == std::string::npos) break;
            t.placeholders.insert(t.body.substr(pos + 1, end - pos - 1));
            pos = end + 1;
        }
        return t;
    }
};

/// Substitutes every placeholder; demands bindings to cover the placeholder
/// set exactly. Binding content is inserted as-is, braces included.
inline std::string render(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
    for (const auto& p : tmpl.placeholders)
        if (!bindings.count(p)) throw MissingPlaceholderError(p);
    for (const auto& [name, value] : bindings)
        if (!tmpl.placeholders.count(name)) throw MissingPlaceholderError(name + " (not in template)");

    std::string out;
    out.reserve(tmpl.body.size());
    size_t pos = 0;
    while (pos < tmpl.body.size()) {
        size_t open = tmpl.body.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl.body, pos, std::string::npos);
            break;
        }
        out.append(tmpl.body, pos, open - pos);
        size_t close = tmpl.body.find('}', open);
        if (close == std::string::npos) {
            out.append(tmpl.body, open, std::string::npos);
            break;
        }
        std::string name = tmpl.body.substr(open + 1, close - open - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingPlaceholderError(name);
        out += it->second;
        pos = close + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Template library
// ---------------------------------------------------------------------------

// JSON shapes appended to prompts through {format_instructions}.
inline const std::string kInferSchema =
    R"({ "python_modules": [{"module": "<String>", "version": "<String>"}], "python_version": "<String>" })";
inline const std::string kVersionSchema = R"({ "module": "<String>", "version": "<String>" })";
inline const std::string kModuleSchema = R"({ "module": "<String>" })";
inline const std::string kModuleVersionSchema =
    R"({ "module": "<String>", "requested_version": "<String>" })";
inline const std::string kConflictSchema = R"({ "modules": ["<String>"] })";
inline const std::string kSyntaxSchema = R"({ "line_number": "<String>" })";
inline const std::string kAttributeSchema = R"({ "module": "<String>", "attribute": "<String>" })";

inline const std::map<std::string, PromptTemplate>& prompt_library() {
    static const std::map<std::string, PromptTemplate> lib = [] {
        std::map<std::string, PromptTemplate> m;
        auto put = [&m](std::string id, std::string body) {
            m.emplace(id, PromptTemplate::make(id, std::move(body)));
        };
        put("infer_file",
            "Given a python file:\n{raw_file}\nReturn a list of Python modules and python version "
            "required to run. Output JSON based on the schema {format_instructions}");
        put("pick_version_rag",
            "Given a comma-separated list of 'Module versions' for the '{module_name}' module, from "
            "oldest to newest:\n{module_versions}\nPerform equally distanced sampling to return a "
            "version from the given versions, excluding previously used versions "
            "({previous_versions}). Return the information with the format {format_instructions}");
        put("pick_version_bare",
            "Infer a possible working version of the '{module_name}' module for Python "
            "{python_version}.\nReturn the information with the format {format_instructions}");
        put("extract_import_error",
            "Given the following ImportError:\n{error_msg}\nIdentify the module causing the "
            "error.\nThe module is usually mentioned in a statement like 'from x import y'.\nReturn "
            "just the module name using the format {format_instructions}");
        put("triage_ModuleNotFound",
            "Given the following error log:\n{error_msg}\nIdentify the module that could not be "
            "found.\nReturn just the module name using the format {format_instructions}");
        put("triage_VersionNotFound",
            "Given the following installer error:\n{error_msg}\nIdentify the module and the "
            "requested version that could not be found.\nReturn the information with the format "
            "{format_instructions}");
        put("triage_InvalidVersion",
            "Given the following installer error:\n{error_msg}\nIdentify the module and the invalid "
            "version string that was requested.\nReturn the information with the format "
            "{format_instructions}");
        put("triage_DependencyConflict",
            "Given the following installer error:\n{error_msg}\nIdentify the modules whose "
            "requirements conflict, in the order they are named.\nReturn the information with the "
            "format {format_instructions}");
        put("triage_AttributeError",
            "Given the following AttributeError:\n{error_msg}\nIdentify the module and the missing "
            "attribute.\nReturn the information with the format {format_instructions}");
        put("triage_SyntaxError",
            "Given the following SyntaxError:\n{error_msg}\nIdentify the line number where the "
            "error occurred.\nReturn the information with the format {format_instructions}");
        return m;
    }();
    return lib;
}

inline const PromptTemplate& prompt(std::string_view id) {
    auto it = prompt_library().find(std::string(id));
    if (it == prompt_library().end()) throw Error("unknown prompt template: " + std::string(id));
    return it->second;
}

/// Template id used to extract the payload for a triage class, if any.
inline std::string triage_template_id(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::ImportError: return "extract_import_error";
        case ErrorClass::NonZeroCode: return {};  // exit code needs no prompt
        default: return "triage_" + to_string(cls);
    }
}

/// Schema block appended to the triage prompt for a class.
inline std::string triage_schema(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::ImportError:
        case ErrorClass::ModuleNotFound: return kModuleSchema;
        case ErrorClass::VersionNotFound:
        case ErrorClass::InvalidVersion: return kModuleVersionSchema;
        case ErrorClass::DependencyConflict: return kConflictSchema;
        case ErrorClass::AttributeError: return kAttributeSchema;
        case ErrorClass::SyntaxError: return kSyntaxSchema;
        case ErrorClass::NonZeroCode: return {};
    }
    return {};
}

}  // namespace envmend
