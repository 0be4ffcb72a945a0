// envmend/repair_loop.hpp - the end-to-end iterative repair cycle
//
// One repair call runs: infer modules + interpreter from the source, expand
// the interpreter neighborhood, pin versions per branch, validate all
// branches in parallel, triage failures, apply one edit per branch, repeat
// until a candidate runs clean or the cycle budget is spent. A branch's
// interpreter never changes once it starts; a SyntaxError eliminates the
// branch outright.
#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "envmend/build_validator.hpp"
#include "envmend/candidate_builder.hpp"
#include "envmend/core_types.hpp"
#include "envmend/dockerfile_emitter.hpp"
#include "envmend/error_triage.hpp"
#include "envmend/llm_gateway.hpp"
#include "envmend/registry_retriever.hpp"
#include "envmend/source_inspector.hpp"

#include "json.hpp"

namespace envmend {

struct LoopConfig {
    int loop_budget = 10;
    int range = 1;
    bool rag = true;
    double temperature = 0.7;
    std::string model_name = "gemma2";
    std::optional<int64_t> seed;
};

enum class RepairStatus { fixed, unfixed, aborted };

inline std::string to_string(RepairStatus s) {
    switch (s) {
        case RepairStatus::fixed: return "fixed";
        case RepairStatus::unfixed: return "unfixed";
        case RepairStatus::aborted: return "aborted";
    }
    return "aborted";
}

struct BranchTrace {
    std::string interpreter;
    std::string candidate_key;
    std::string phase;
    std::string status;
    std::optional<std::string> triage_class;
    double duration_seconds = 0.0;
};

struct CycleTrace {
    int iteration = 0;
    std::vector<BranchTrace> branches;
};

struct RepairResult {
    RepairStatus status = RepairStatus::unfixed;
    std::optional<EnvironmentCandidate> winning_candidate;
    int iterations_used = 0;
    double wall_time_seconds = 0.0;
    std::vector<CycleTrace> per_iteration_trace;
    std::vector<std::string> warnings;
    std::string failure_reason;  // set when aborted
};

// ---------------------------------------------------------------------------
// Interpreter normalization
// ---------------------------------------------------------------------------

/// Free-text interpreter prediction -> supported series. "2" and 2.x map to
/// 2.7, a bare "3" to 3.6, out-of-range 3.x minors clamp to the nearest
/// supported series; anything else falls back to 3.6 with a warning.
inline std::pair<InterpreterVersion, std::optional<std::string>> normalize_interpreter(
    const std::string& text) {
    auto coerced = detail::coerce_python_version(text);
    if (!coerced)
        return {InterpreterVersion{"3.6"}, "unparseable interpreter '" + text + "', using 3.6"};
    std::string v = *coerced;
    size_t dot = v.find('.');
    int major = std::stoi(v.substr(0, dot));
    std::optional<int> minor;
    if (dot != std::string::npos) minor = std::stoi(v.substr(dot + 1));

    if (major == 2) return {InterpreterVersion{"2.7"}, std::nullopt};
    if (major == 3) {
        if (!minor) return {InterpreterVersion{"3.6"}, std::nullopt};
        int clamped = std::min(12, std::max(4, *minor));
        return {InterpreterVersion{"3." + std::to_string(clamped)}, std::nullopt};
    }
    return {InterpreterVersion{"3.6"},
            "unsupported interpreter '" + text + "', using 3.6"};
}

// ---------------------------------------------------------------------------
// Stage A merge
// ---------------------------------------------------------------------------

struct MergeResult {
    std::vector<ModuleRequirement> requirements;
    InterpreterVersion interpreter;
    std::vector<std::string> warnings;
};

/// Union of statically extracted and model-inferred modules, keyed by install
/// name after mapping; static mentions win on conflicts. Version hints from
/// inference are dropped.
inline MergeResult merge_stage_a(const std::vector<ModuleRequirement>& statik,
                                 const InferredEnvironment& inferred, const NameMapping& mapping) {
    MergeResult out;
    std::set<std::string> have;
    for (const auto& req : statik) {
        if (have.insert(req.install_name).second) out.requirements.push_back(req);
    }
    for (const auto& [module, hint] : inferred.python_modules) {
        (void)hint;
        std::string install = mapping.lookup(module);
        if (have.insert(install).second)
            out.requirements.push_back(ModuleRequirement{module, install, {}});
    }
    auto [interp, warning] = normalize_interpreter(inferred.python_version);
    out.interpreter = interp;
    if (warning) out.warnings.push_back(*warning);
    return out;
}

// ---------------------------------------------------------------------------
// Trace emission
// ---------------------------------------------------------------------------

/// Writes one JSON record per line to the per-file trace document.
class TraceWriter {
public:
    TraceWriter() = default;
    explicit TraceWriter(const std::filesystem::path& path) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path, std::ios::trunc);
    }

    void write(const nlohmann::json& record) {
        if (!out_.is_open()) return;
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << record.dump() << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Repair engine
// ---------------------------------------------------------------------------

struct RepairEngineOptions {
    std::string snippet_filename = "snippet.py";
    int pip_timeout_seconds = 100;
    std::optional<int64_t> now;  // forwarded to the interpreter windows
};

class RepairEngine {
public:
    RepairEngine(Gateway& gateway, RegistryRetriever& retriever, Validator& validator,
                 const StdlibIndex& stdlib, NameMapping mapping, RepairEngineOptions options = {})
        : gateway_(&gateway),
          retriever_(&retriever),
          validator_(&validator),
          stdlib_(&stdlib),
          mapping_(std::move(mapping)),
          options_(std::move(options)) {}

    RepairResult repair(const SourceFile& file, const LoopConfig& cfg,
                        TraceWriter* trace = nullptr) {
        auto t0 = std::chrono::steady_clock::now();
        RepairResult result;
        try {
            result = run_loop(file, cfg, trace);
        } catch (const EngineUnavailableError& e) {
            result.status = RepairStatus::aborted;
            result.failure_reason = e.what();
        } catch (const BackendError& e) {
            result.status = RepairStatus::aborted;
            result.failure_reason = e.what();
        } catch (const MalformedReplyError& e) {
            result.status = RepairStatus::aborted;
            result.failure_reason = e.what();
        } catch (const RegistryUnavailableError& e) {
            result.status = RepairStatus::aborted;
            result.failure_reason = e.what();
        }
        result.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (trace)
            trace->write({{"event", "result"},
                           {"status", to_string(result.status)},
                           {"iterations", result.iterations_used},
                           {"wall_time_seconds", result.wall_time_seconds},
                           {"winning_key", result.winning_candidate
                                               ? result.winning_candidate->canonical_key()
                                               : ""}});
        return result;
    }

private:
    struct Branch {
        InterpreterVersion interpreter;
        std::optional<EnvironmentCandidate> candidate;
        std::optional<TriageReport> triage;
        bool live = true;
    };

    GenerationRequest request(const LoopConfig& cfg) const {
        GenerationRequest req;
        req.model_name = cfg.model_name;
        req.temperature = cfg.temperature;
        req.seed = cfg.seed;
        return req;
    }

    RepairResult run_loop(const SourceFile& file, const LoopConfig& cfg, TraceWriter* trace) {
        if (cfg.loop_budget < 1) throw Error("loop budget must be at least 1");
        if (cfg.range < 0 || cfg.range > 3) throw Error("interpreter range must be in [0,3]");
        RepairResult result;

        // Stage A: model inference plus the static import scan.
        InferredEnvironment inferred = gateway_->infer_environment(file, request(cfg));
        auto [interp, warning] = normalize_interpreter(inferred.python_version);
        if (warning) result.warnings.push_back(*warning);

        std::vector<ModuleRequirement> reqs;
        if (cfg.rag) {
            auto mentions = filter_stdlib(extract_imports(file), interp, *stdlib_);
            MergeResult merged = merge_stage_a(to_requirements(mentions, mapping_), inferred, mapping_);
            for (auto& w : merged.warnings) result.warnings.push_back(w);
            reqs = std::move(merged.requirements);
        } else {
            std::set<std::string> have;
            for (const auto& [module, hint] : inferred.python_modules) {
                (void)hint;
                std::string install = mapping_.lookup(module);
                if (have.insert(install).second)
                    reqs.push_back(ModuleRequirement{module, install, {}});
            }
            if (reqs.empty()) {
                auto mentions = filter_stdlib(extract_imports(file), interp, *stdlib_);
                reqs = to_requirements(mentions, mapping_);
            }
        }
        // Inference may list stdlib names; they never need installing.
        std::vector<ModuleRequirement> third_party;
        for (const auto& req : reqs)
            if (!stdlib_->is_stdlib(req.import_name, interp)) third_party.push_back(req);
        reqs = std::move(third_party);

        if (trace) {
            nlohmann::json mods = nlohmann::json::array();
            for (const auto& r : reqs) mods.push_back(r.install_name);
            trace->write({{"event", "stage_a"},
                           {"interpreter", interp.series},
                           {"modules", mods},
                           {"warnings", result.warnings}});
        }

        CandidateBuilder builder(*gateway_, *retriever_, mapping_,
                                 BuilderOptions{cfg.model_name, cfg.temperature, cfg.seed,
                                                options_.now});
        AttemptHistory history;
        static std::atomic<uint64_t> run_counter{0};
        std::string run_id = fnv1a64_hex(file.path.string() + "#" +
                                         std::to_string(cfg.seed.value_or(0)) + "#" +
                                         std::to_string(run_counter.fetch_add(1)));

        std::vector<Branch> branches;
        for (const auto& series : expand_interpreters(interp, cfg.range))
            branches.push_back(Branch{series, {}, {}, true});

        for (int iteration = 1; iteration <= cfg.loop_budget; ++iteration) {
            // Build the next candidate per live branch.
            std::vector<size_t> active;
            std::vector<BuildRecipe> recipes;
            for (size_t b = 0; b < branches.size(); ++b) {
                Branch& branch = branches[b];
                if (!branch.live) continue;
                try {
                    EnvironmentCandidate candidate =
                        (!branch.candidate || !branch.triage)
                            ? builder.pin_versions(reqs, branch.interpreter, history, cfg.rag)
                            : builder.vary_after_failure(*branch.candidate, *branch.triage, history,
                                                         cfg.rag);
                    history.record_candidate(candidate);
                    branch.candidate = candidate;
                    BuildRecipe recipe{candidate, options_.snippet_filename,
                                       options_.pip_timeout_seconds,
                                       make_container_tag(run_id + "-i" + std::to_string(iteration),
                                                          candidate)};
                    active.push_back(b);
                    recipes.push_back(std::move(recipe));
                } catch (const CandidateSpaceExhaustedError&) {
                    branch.live = false;
                } catch (const UnknownPackageError& e) {
                    // wrong install name; nothing further to try on this branch
                    branch.live = false;
                    result.warnings.push_back(std::string("unknown package: ") + e.install_name);
                }
            }
            if (recipes.empty()) {
                result.status = RepairStatus::unfixed;
                result.iterations_used = iteration - 1;
                return result;
            }

            std::vector<BuildOutcome> outcomes = validator_->validate_parallel(recipes);
            history.bump_iteration();
            result.iterations_used = iteration;

            CycleTrace cycle;
            cycle.iteration = iteration;
            ErrorTriage triage(gateway_, request(cfg));
            std::optional<size_t> winner;
            for (size_t i = 0; i < outcomes.size(); ++i) {
                const BuildOutcome& outcome = outcomes[i];
                Branch& branch = branches[active[i]];
                BranchTrace bt{branch.interpreter.series, outcome.candidate_key,
                               to_string(outcome.phase), to_string(outcome.status), {},
                               outcome.duration_seconds};

                bool clean = outcome.ok() && run_is_clean(outcome);
                if (clean && !winner) {
                    winner = i;
                } else if (!clean) {
                    BuildOutcome failed = outcome;
                    if (failed.status == BuildStatus::success) failed.status = BuildStatus::failure;
                    TriageReport report = triage.classify(failed);
                    bt.triage_class = to_string(report.primary_class);
                    if (report.primary_class == ErrorClass::SyntaxError) {
                        branch.live = false;  // wrong series; never re-pinned mid-branch
                    } else {
                        branch.triage = report;
                    }
                }
                cycle.branches.push_back(std::move(bt));
            }
            result.per_iteration_trace.push_back(cycle);
            if (trace) trace->write(cycle_json(cycle));

            if (winner) {
                result.status = RepairStatus::fixed;
                result.winning_candidate = branches[active[*winner]].candidate;
                return result;
            }
        }

        result.status = RepairStatus::unfixed;
        result.iterations_used = cfg.loop_budget;
        return result;
    }

    /// A clean run must not show any of the critical runtime errors even when
    /// the exit code is zero.
    static bool run_is_clean(const BuildOutcome& outcome) {
        if (outcome.phase != BuildPhase::run || outcome.exit_code != 0) return false;
        auto classes = detect_classes(outcome.log);
        return !classes.count(ErrorClass::ImportError) && !classes.count(ErrorClass::ModuleNotFound) &&
               !classes.count(ErrorClass::AttributeError) && !classes.count(ErrorClass::SyntaxError);
    }

    static nlohmann::json cycle_json(const CycleTrace& cycle) {
        nlohmann::json branches = nlohmann::json::array();
        for (const auto& b : cycle.branches) {
            nlohmann::json j = {{"interpreter", b.interpreter},
                                {"candidate_key", b.candidate_key},
                                {"phase", b.phase},
                                {"status", b.status},
                                {"duration_seconds", b.duration_seconds}};
            if (b.triage_class) j["triage"] = *b.triage_class;
            branches.push_back(std::move(j));
        }
        return {{"event", "cycle"}, {"iteration", cycle.iteration}, {"branches", branches}};
    }

    Gateway* gateway_;
    RegistryRetriever* retriever_;
    Validator* validator_;
    const StdlibIndex* stdlib_;
    NameMapping mapping_;
    RepairEngineOptions options_;
};

}  // namespace envmend
