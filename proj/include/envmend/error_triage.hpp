// envmend/error_triage.hpp - failure log classification
//
// Scans a failed outcome's log with per-class signature detectors and picks
// the primary class by precedence:
//   SyntaxError > VersionNotFound > InvalidVersion > DependencyConflict
//   > ModuleNotFound > ImportError > AttributeError > NonZeroCode
// A SyntaxError marks an incompatible interpreter series and must win;
// installer-phase errors outrank runtime ones because the run never started.
// Payloads come from deterministic patterns first; the gateway is asked only
// when those fail.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "envmend/build_outcome.hpp"
#include "envmend/error_class.hpp"
#include "envmend/llm_gateway.hpp"

namespace envmend {

struct TriageReport {
    ErrorClass primary_class = ErrorClass::NonZeroCode;
    std::map<std::string, std::string> payload;
    std::string matched_excerpt;
    bool used_llm_extraction = false;
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline std::string top_level_of(const std::string& dotted) {
    return dotted.substr(0, dotted.find('.'));
}

inline bool line_matches(ErrorClass cls, const std::string& line) {
    switch (cls) {
        case ErrorClass::SyntaxError:
            return line.find("SyntaxError:") != std::string::npos ||
                   line.find("IndentationError:") != std::string::npos ||
                   line.find("TabError:") != std::string::npos;
        case ErrorClass::VersionNotFound:
            return line.find("Could not find a version that satisfies the requirement") !=
                       std::string::npos ||
                   line.find("No matching distribution found for") != std::string::npos;
        case ErrorClass::InvalidVersion:
            return line.find("Invalid requirement:") != std::string::npos ||
                   line.find("INVALID REQUIREMENT") != std::string::npos ||
                   line.find("Invalid version:") != std::string::npos ||
                   line.find("is not a valid version") != std::string::npos ||
                   line.find("invalid version specifier") != std::string::npos;
        case ErrorClass::DependencyConflict:
            return line.find("conflicting dependencies") != std::string::npos ||
                   line.find("ResolutionImpossible") != std::string::npos ||
                   line.find("which is incompatible") != std::string::npos ||
                   line.find("The conflict is caused by") != std::string::npos;
        case ErrorClass::ModuleNotFound:
            return line.find("No module named") != std::string::npos;
        case ErrorClass::ImportError:
            return line.find("ImportError:") != std::string::npos &&
                   line.find("No module named") == std::string::npos;
        case ErrorClass::AttributeError:
            return line.find("AttributeError:") != std::string::npos;
        case ErrorClass::NonZeroCode:
            return false;  // fallback class, no signature
    }
    return false;
}

}  // namespace detail

/// Classes in primary-selection order, highest precedence first.
inline constexpr std::array<ErrorClass, 8> kTriagePrecedence = {
    ErrorClass::SyntaxError,     ErrorClass::VersionNotFound, ErrorClass::InvalidVersion,
    ErrorClass::DependencyConflict, ErrorClass::ModuleNotFound, ErrorClass::ImportError,
    ErrorClass::AttributeError,  ErrorClass::NonZeroCode,
};

/// Index of the first line carrying the class signature, if any.
inline std::optional<size_t> first_signature_line(const std::vector<std::string>& lines,
                                                  ErrorClass cls) {
    for (size_t i = 0; i < lines.size(); ++i)
        if (detail::line_matches(cls, lines[i])) return i;
    return std::nullopt;
}

/// All classes whose signature appears anywhere in the log.
inline std::set<ErrorClass> detect_classes(const std::string& log) {
    std::set<ErrorClass> out;
    auto lines = detail::split_lines(log);
    for (ErrorClass cls : kAllErrorClasses) {
        if (cls == ErrorClass::NonZeroCode) continue;
        if (first_signature_line(lines, cls)) out.insert(cls);
    }
    return out;
}

/// Minimal contiguous slice around the first signature of `cls`, with up to
/// five context lines on each side.
inline std::string excerpt_for_prompt(const BuildOutcome& outcome, ErrorClass cls) {
    auto lines = detail::split_lines(outcome.log);
    if (lines.empty()) return {};
    size_t center;
    if (auto hit = first_signature_line(lines, cls)) {
        center = *hit;
    } else {
        center = lines.size() - 1;  // NonZeroCode and friends: tail context
    }
    size_t lo = center >= 5 ? center - 5 : 0;
    size_t hi = std::min(lines.size(), center + 6);
    std::string out;
    for (size_t i = lo; i < hi; ++i) {
        out += lines[i];
        if (i + 1 < hi) out += '\n';
    }
    return out;
}

class ErrorTriage {
public:
    ErrorTriage() = default;
    /// With a gateway attached, payloads the patterns cannot fill are
    /// extracted through a focused prompt per class.
    ErrorTriage(const Gateway* gateway, GenerationRequest request_template)
        : gateway_(gateway), request_template_(std::move(request_template)) {}

    TriageReport classify(const BuildOutcome& outcome) const {
        auto lines = detail::split_lines(outcome.log);
        for (ErrorClass cls : kTriagePrecedence) {
            if (cls == ErrorClass::NonZeroCode) break;
            auto hit = first_signature_line(lines, cls);
            if (!hit) continue;
            TriageReport report;
            report.primary_class = cls;
            report.matched_excerpt = excerpt_for_prompt(outcome, cls);
            report.payload = extract_payload(cls, lines, *hit);
            if (!payload_complete(cls, report.payload) && gateway_) {
                try {
                    auto extra =
                        gateway_->extract_error_payload(cls, report.matched_excerpt, request_template_);
                    for (auto& [k, v] : extra)
                        if (!report.payload.count(k)) report.payload[k] = v;
                    report.used_llm_extraction = true;
                } catch (const Error&) {
                    // leave the deterministic partial payload as-is
                }
            }
            return report;
        }
        TriageReport report;
        report.primary_class = ErrorClass::NonZeroCode;
        report.payload["exit_code"] =
            outcome.exit_code ? std::to_string(*outcome.exit_code) : std::string("-1");
        report.matched_excerpt = excerpt_for_prompt(outcome, ErrorClass::NonZeroCode);
        return report;
    }

    static bool payload_complete(ErrorClass cls, const std::map<std::string, std::string>& p) {
        auto has = [&p](const char* k) {
            auto it = p.find(k);
            return it != p.end() && !it->second.empty();
        };
        switch (cls) {
            case ErrorClass::ImportError:
            case ErrorClass::ModuleNotFound: return has("module");
            case ErrorClass::VersionNotFound:
            case ErrorClass::InvalidVersion: return has("module") && has("requested_version");
            case ErrorClass::DependencyConflict:
                return has("conflicting_modules") || has("constraint");
            case ErrorClass::AttributeError: return has("module") && has("attribute");
            case ErrorClass::SyntaxError: return true;  // line_number only when present
            case ErrorClass::NonZeroCode: return true;
        }
        return true;
    }

private:
    static std::map<std::string, std::string> extract_payload(ErrorClass cls,
                                                              const std::vector<std::string>& lines,
                                                              size_t hit) {
        std::map<std::string, std::string> p;
        const std::string& line = lines[hit];
        std::smatch m;
        switch (cls) {
            case ErrorClass::SyntaxError: {
                // line number lives on the "File ..., line N" frame above, or
                // inline as "... (snippet.py, line N)"
                static const std::regex inline_re(R"(\(.*, line (\d+)\))");
                static const std::regex file_re(R"(File "[^"]*", line (\d+))");
                if (std::regex_search(line, m, inline_re)) {
                    p["line_number"] = m[1].str();
                    break;
                }
                size_t lo = hit >= 6 ? hit - 6 : 0;
                for (size_t i = hit; i-- > lo;) {
                    if (std::regex_search(lines[i], m, file_re)) {
                        p["line_number"] = m[1].str();
                        break;
                    }
                }
                break;
            }
            case ErrorClass::VersionNotFound: {
                static const std::regex req_re(
                    R"(requirement ([A-Za-z0-9_.\-]+)==([^\s,()]+))");
                static const std::regex dist_re(
                    R"(No matching distribution found for ([A-Za-z0-9_.\-]+)==(\S+))");
                if (std::regex_search(line, m, req_re) || std::regex_search(line, m, dist_re)) {
                    p["module"] = m[1].str();
                    p["requested_version"] = m[2].str();
                }
                break;
            }
            case ErrorClass::InvalidVersion: {
                static const std::regex quoted_re(R"(['"]([A-Za-z0-9_.\-]+)==([^'"]*)['"])");
                if (std::regex_search(line, m, quoted_re)) {
                    p["module"] = m[1].str();
                    p["requested_version"] = m[2].str();
                }
                break;
            }
            case ErrorClass::DependencyConflict: {
                std::vector<std::string> names = conflict_names(lines, hit);
                if (names.size() >= 2)
                    p["conflicting_modules"] = join(names, ",");
                else
                    p["constraint"] = line;
                break;
            }
            case ErrorClass::ModuleNotFound: {
                static const std::regex mod_re(R"(No module named '?([A-Za-z0-9_\.]+)'?)");
                if (std::regex_search(line, m, mod_re))
                    p["module"] = detail::top_level_of(m[1].str());
                break;
            }
            case ErrorClass::ImportError: {
                static const std::regex from_re(R"(from '([A-Za-z0-9_\.]+)')");
                if (std::regex_search(line, m, from_re)) {
                    p["module"] = detail::top_level_of(m[1].str());
                    break;
                }
                if (auto mod = import_frame_module(lines, hit)) p["module"] = *mod;
                break;
            }
            case ErrorClass::AttributeError: {
                static const std::regex mod_attr_re(
                    R"(AttributeError: module '([A-Za-z0-9_\.]+)' has no attribute '([^']+)')");
                if (std::regex_search(line, m, mod_attr_re)) {
                    p["module"] = detail::top_level_of(m[1].str());
                    p["attribute"] = m[2].str();
                    break;
                }
                static const std::regex obj_attr_re(R"(has no attribute '([^']+)')");
                if (std::regex_search(line, m, obj_attr_re)) p["attribute"] = m[1].str();
                if (auto mod = import_frame_module(lines, hit)) p["module"] = *mod;
                break;
            }
            case ErrorClass::NonZeroCode: break;
        }
        return p;
    }

    /// Module named on the nearest import statement above the failing line.
    static std::optional<std::string> import_frame_module(const std::vector<std::string>& lines,
                                                          size_t hit) {
        static const std::regex import_re(R"(^\s*(?:from|import)\s+([A-Za-z_][A-Za-z0-9_\.]*))");
        size_t lo = hit >= 8 ? hit - 8 : 0;
        std::smatch m;
        for (size_t i = hit; i-- > lo;)
            if (std::regex_search(lines[i], m, import_re))
                return detail::top_level_of(m[1].str());
        return std::nullopt;
    }

    static std::vector<std::string> conflict_names(const std::vector<std::string>& lines,
                                                   size_t hit) {
        std::vector<std::string> names;
        std::set<std::string> seen;
        auto add = [&](std::string name) {
            size_t eq = name.find("==");
            if (eq != std::string::npos) name.resize(eq);
            while (!name.empty() && !std::isalnum(static_cast<unsigned char>(name.back())))
                name.pop_back();
            if (!name.empty() && seen.insert(name).second) names.push_back(name);
        };
        std::smatch m;
        static const std::regex cannot_re(R"(Cannot install (.+) because)");
        static const std::regex old_re(
            R"(([A-Za-z0-9_.\-]+) \S+ has requirement ([A-Za-z0-9_.\-]+))");
        static const std::regex requested_re(R"(The user requested ([A-Za-z0-9_.\-=]+))");
        static const std::regex depends_re(R"(\s*([A-Za-z0-9_.\-]+) \S+ depends on ([A-Za-z0-9_.\-]+))");

        size_t hi = std::min(lines.size(), hit + 12);
        for (size_t i = hit; i < hi; ++i) {
            const std::string& line = lines[i];
            if (std::regex_search(line, m, cannot_re)) {
                // "a==1 and b==2" or "a, b and c"
                std::string list = m[1].str();
                size_t start = 0;
                auto flush = [&](size_t end) {
                    std::string tok = list.substr(start, end - start);
                    size_t b = tok.find_first_not_of(' ');
                    if (b != std::string::npos) add(tok.substr(b));
                };
                for (size_t j = 0; j + 5 <= list.size(); ++j) {
                    if (list.compare(j, 5, " and ") == 0) {
                        flush(j);
                        start = j + 5;
                    } else if (list[j] == ',') {
                        flush(j);
                        start = j + 1;
                    }
                }
                flush(list.size());
            } else if (std::regex_search(line, m, old_re)) {
                add(m[1].str());
                add(m[2].str());
            } else if (std::regex_search(line, m, requested_re)) {
                add(m[1].str());
            } else if (std::regex_search(line, m, depends_re)) {
                add(m[1].str());
                add(m[2].str());
            }
        }
        return names;
    }

    const Gateway* gateway_ = nullptr;
    GenerationRequest request_template_;
};

}  // namespace envmend
