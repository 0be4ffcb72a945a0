// envmend/dockerfile_emitter.hpp - deterministic container build files
#pragma once

#include <string>

#include "envmend/core_types.hpp"
#include "envmend/errors.hpp"

namespace envmend {

/// Everything needed to build and run one candidate in a container.
struct BuildRecipe {
    EnvironmentCandidate candidate;
    std::string snippet_filename = "snippet.py";
    int pip_timeout_seconds = 100;
    std::string container_tag;  // unique per (run id, candidate key)
};

namespace detail {

inline bool token_ok(const std::string& s, const char* extra) {
    if (s.empty()) return false;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) continue;
        bool found = false;
        for (const char* p = extra; *p; ++p)
            if (*p == c) found = true;
        if (!found) return false;
    }
    return true;
}

}  // namespace detail

/// Emits the build file, one pip layer per pin so a failing install names its
/// module. Pure function of the recipe; identical recipe, identical bytes.
inline std::string emit_dockerfile(const BuildRecipe& recipe) {
    const auto& cand = recipe.candidate;
    if (!detail::token_ok(cand.interpreter.series, "."))
        throw Error("unsafe interpreter series: " + cand.interpreter.series);
    if (!detail::token_ok(recipe.snippet_filename, "._-"))
        throw Error("unsafe snippet filename: " + recipe.snippet_filename);

    std::string out;
    out += "FROM python:" + cand.interpreter.series + "\n";
    out += "WORKDIR /app\n";
    out += "RUN [\"pip\",\"install\",\"--upgrade\",\"pip\"]\n";
    for (const auto& pin : cand.pins) {
        if (!pin.version || pin.version->empty())
            throw Error("unpinned module in recipe: " + pin.install_name);
        if (!detail::token_ok(pin.install_name, "._-"))
            throw Error("unsafe module name: " + pin.install_name);
        if (!detail::token_ok(*pin.version, "._+!-"))
            throw Error("unsafe version string: " + *pin.version);
        out += "RUN [\"pip\",\"install\",\"--trusted-host\",\"pypi.python.org\",\"--default-timeout=" +
               std::to_string(recipe.pip_timeout_seconds) + "\",\"" + pin.install_name + "==" +
               *pin.version + "\"]\n";
    }
    out += "COPY " + recipe.snippet_filename + " /app\n";
    out += "CMD [\"python\", \"/app/" + recipe.snippet_filename + "\"]\n";
    return out;
}

/// Collision-free tag for concurrent builds.
inline std::string make_container_tag(const std::string& run_id, const EnvironmentCandidate& cand) {
    return "envmend-" + run_id + "-" + fnv1a64_hex(cand.canonical_key());
}

}  // namespace envmend
