// envmend/build_outcome.hpp - result of validating one candidate
#pragma once

#include <optional>
#include <string>

namespace envmend {

enum class BuildPhase { build, run };
enum class BuildStatus { success, failure, timeout };

inline std::string to_string(BuildPhase p) { return p == BuildPhase::build ? "build" : "run"; }
inline std::string to_string(BuildStatus s) {
    switch (s) {
        case BuildStatus::success: return "success";
        case BuildStatus::failure: return "failure";
        case BuildStatus::timeout: return "timeout";
    }
    return "failure";
}

struct BuildOutcome {
    BuildPhase phase = BuildPhase::build;
    BuildStatus status = BuildStatus::failure;
    std::optional<int> exit_code;
    std::string log;  // both streams, interleaved, order-preserving
    double duration_seconds = 0.0;
    std::string candidate_key;

    bool ok() const { return status == BuildStatus::success; }
};

}  // namespace envmend
