// envmend/candidate_builder.hpp - assembling fully pinned candidates
//
// Builds the next environment hypothesis for one interpreter branch: initial
// pinning of every requirement, then single-edit variations driven by triage
// feedback. Exactly one of {module set, one module's pin, interpreter}
// changes per variation, and no returned candidate repeats a key already in
// the attempt history.
#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "envmend/core_types.hpp"
#include "envmend/error_triage.hpp"
#include "envmend/errors.hpp"
#include "envmend/llm_gateway.hpp"
#include "envmend/registry_retriever.hpp"

namespace envmend {

/// The interpreter set validated in parallel: the contiguous 3.x neighborhood
/// of the prediction (clipped to the supported series) plus 2.7, which is
/// always worth one legacy attempt. A 2.7 prediction anchors the 3.x band at
/// 3.4 with one step less radius.
inline std::vector<InterpreterVersion> expand_interpreters(const InterpreterVersion& predicted,
                                                           int range) {
    if (!InterpreterVersion::is_supported(predicted.series))
        throw UnsupportedInterpreterError(predicted.series);
    if (range < 0 || range > 3) throw Error("interpreter range must be in [0,3]");

    std::vector<std::string> py3(InterpreterVersion::supported().begin() + 1,
                                 InterpreterVersion::supported().end());
    std::set<std::string> series = {"2.7"};
    auto add_neighborhood = [&](const std::string& center, int radius) {
        auto it = std::find(py3.begin(), py3.end(), center);
        if (it == py3.end()) return;
        long idx = it - py3.begin();
        long lo = std::max<long>(0, idx - radius);
        long hi = std::min<long>(static_cast<long>(py3.size()) - 1, idx + radius);
        for (long i = lo; i <= hi; ++i) series.insert(py3[static_cast<size_t>(i)]);
    };
    if (predicted.series == "2.7") {
        if (range >= 1) add_neighborhood("3.4", range - 1);
    } else {
        add_neighborhood(predicted.series, range);
    }

    std::vector<InterpreterVersion> out;
    for (const auto& s : series) out.push_back(InterpreterVersion{s});
    std::sort(out.begin(), out.end());
    return out;
}

struct BuilderOptions {
    std::string model_name;
    double temperature = 0.7;
    std::optional<int64_t> seed;
    std::optional<int64_t> now;  // pins the interpreter windows for testing
};

class CandidateBuilder {
public:
    CandidateBuilder(Gateway& gateway, RegistryRetriever& retriever, NameMapping mapping,
                     BuilderOptions options = {})
        : gateway_(&gateway),
          retriever_(&retriever),
          mapping_(std::move(mapping)),
          options_(std::move(options)) {}

    /// Initial candidate for one branch: every requirement pinned, key not in
    /// history. Version hints arriving on the requirements are ignored; all
    /// pins come from the version-selection prompts.
    EnvironmentCandidate pin_versions(const std::vector<ModuleRequirement>& reqs,
                                      const InterpreterVersion& interpreter,
                                      const AttemptHistory& history, bool rag) {
        std::vector<ModuleRequirement> pins;
        for (const auto& req : reqs) {
            ModuleRequirement pin = req;
            pin.version = pick(req, interpreter, history, {}, rag);
            pins.push_back(std::move(pin));
        }
        EnvironmentCandidate candidate = EnvironmentCandidate::make(interpreter, std::move(pins));
        return dedup_against_history(std::move(candidate), history, rag);
    }

    /// One edit derived from the triage class: add the missing module, re-pin
    /// the offending module, or move to another interpreter (SyntaxError).
    EnvironmentCandidate vary_after_failure(const EnvironmentCandidate& prev,
                                            const TriageReport& triage,
                                            const AttemptHistory& history, bool rag) {
        switch (triage.primary_class) {
            case ErrorClass::ModuleNotFound:
            case ErrorClass::ImportError:
            case ErrorClass::AttributeError: {
                std::string import_name = payload_value(triage, "module");
                if (import_name.empty()) return repin_first_varyable(prev, history, rag);
                std::string install = mapping_.lookup(import_name);
                if (prev.find_pin(install))
                    return repin(prev, install, history, rag, {});
                return add_module(prev, ModuleRequirement{import_name, install, {}}, history, rag);
            }
            case ErrorClass::VersionNotFound:
            case ErrorClass::InvalidVersion: {
                std::string install = payload_value(triage, "module");
                std::string requested = payload_value(triage, "requested_version");
                if (install.empty()) return repin_first_varyable(prev, history, rag);
                std::set<std::string> extra;
                if (!requested.empty()) extra.insert(requested);
                if (prev.find_pin(install)) return repin(prev, install, history, rag, extra);
                return add_module(prev, ModuleRequirement{install, install, {}}, history, rag);
            }
            case ErrorClass::DependencyConflict: {
                std::vector<std::string> named = detail::split_csv(payload_value(triage, "conflicting_modules"));
                for (const auto& name : named)
                    if (prev.find_pin(mapping_.lookup(name)))
                        return repin(prev, mapping_.lookup(name), history, rag, {});
                if (!named.empty()) {
                    std::string install = mapping_.lookup(named.front());
                    return add_module(prev, ModuleRequirement{named.front(), install, {}}, history, rag);
                }
                return repin_first_varyable(prev, history, rag);
            }
            case ErrorClass::SyntaxError:
                return repin_interpreter(prev, history);
            case ErrorClass::NonZeroCode:
            default:
                return repin_first_varyable(prev, history, rag);
        }
    }

private:
    static std::string payload_value(const TriageReport& triage, const char* key) {
        auto it = triage.payload.find(key);
        return it == triage.payload.end() ? std::string{} : it->second;
    }

    GenerationRequest request() const {
        GenerationRequest req;
        req.model_name = options_.model_name;
        req.temperature = options_.temperature;
        req.seed = options_.seed;
        return req;
    }

    std::string pick(const ModuleRequirement& req, const InterpreterVersion& interpreter,
                     const AttemptHistory& history, const std::set<std::string>& extra_excluded,
                     bool rag) {
        std::vector<std::string> previous = history.tried_versions(req.install_name, interpreter);
        for (const auto& v : extra_excluded)
            if (std::find(previous.begin(), previous.end(), v) == previous.end())
                previous.push_back(v);
        try {
            if (rag) {
                VersionCatalog catalog = retriever_->fetch_catalog(req.install_name);
                VersionCatalog filtered = RegistryRetriever::filter_for_interpreter(
                    catalog, window_for(interpreter, options_.now));
                return gateway_->pick_version(req, RegistryRetriever::to_prompt_text(filtered),
                                              previous, interpreter, request());
            }
            return gateway_->pick_version(req, std::nullopt, previous, interpreter, request());
        } catch (const VersionsExhaustedError& e) {
            throw CandidateSpaceExhaustedError(e.module);
        }
    }

    /// Re-picks versions for the last pinned module until the key leaves the
    /// history (collisions are rare under retrieval, routine without it).
    EnvironmentCandidate dedup_against_history(EnvironmentCandidate candidate,
                                               const AttemptHistory& history, bool rag) {
        if (!history.contains(candidate.canonical_key())) return candidate;
        if (candidate.pins.empty())
            throw CandidateSpaceExhaustedError(candidate.interpreter.series);
        std::set<std::string> extra;
        for (int guard = 0; guard < 8; ++guard) {
            ModuleRequirement& last = candidate.pins.back();
            extra.insert(*last.version);
            ModuleRequirement bare{last.import_name, last.install_name, {}};
            last.version = pick(bare, candidate.interpreter, history, extra, rag);
            if (!history.contains(candidate.canonical_key())) return candidate;
        }
        throw CandidateSpaceExhaustedError(candidate.pins.back().install_name);
    }

    EnvironmentCandidate repin(const EnvironmentCandidate& prev, const std::string& install,
                               const AttemptHistory& history, bool rag,
                               std::set<std::string> extra) {
        const ModuleRequirement* pin = prev.find_pin(install);
        ModuleRequirement bare{pin ? pin->import_name : install, install, {}};
        if (pin && pin->version) extra.insert(*pin->version);
        for (int guard = 0; guard < 8; ++guard) {
            std::string version = pick(bare, prev.interpreter, history, extra, rag);
            std::vector<ModuleRequirement> pins = prev.pins;
            bool replaced = false;
            for (auto& p : pins)
                if (p.install_name == install) {
                    p.version = version;
                    replaced = true;
                }
            if (!replaced) pins.push_back(ModuleRequirement{bare.import_name, install, version});
            EnvironmentCandidate candidate = EnvironmentCandidate::make(prev.interpreter, std::move(pins));
            if (!history.contains(candidate.canonical_key())) return candidate;
            extra.insert(version);
        }
        throw CandidateSpaceExhaustedError(install);
    }

    EnvironmentCandidate add_module(const EnvironmentCandidate& prev, ModuleRequirement req,
                                    const AttemptHistory& history, bool rag) {
        std::set<std::string> extra;
        for (int guard = 0; guard < 8; ++guard) {
            std::string version = pick(req, prev.interpreter, history, extra, rag);
            std::vector<ModuleRequirement> pins = prev.pins;
            pins.push_back(ModuleRequirement{req.import_name, req.install_name, version});
            EnvironmentCandidate candidate = EnvironmentCandidate::make(prev.interpreter, std::move(pins));
            if (!history.contains(candidate.canonical_key())) return candidate;
            extra.insert(version);
        }
        throw CandidateSpaceExhaustedError(req.install_name);
    }

    /// NonZeroCode and payload-less classes: first pinned module that still
    /// has an untried version gets a new pin.
    EnvironmentCandidate repin_first_varyable(const EnvironmentCandidate& prev,
                                              const AttemptHistory& history, bool rag) {
        for (const auto& pin : prev.pins) {
            try {
                return repin(prev, pin.install_name, history, rag, {});
            } catch (const CandidateSpaceExhaustedError&) {
                continue;
            }
        }
        throw CandidateSpaceExhaustedError(prev.pins.empty() ? prev.interpreter.series
                                                             : prev.pins.front().install_name);
    }

    /// SyntaxError edit: same pins on the nearest untried interpreter.
    EnvironmentCandidate repin_interpreter(const EnvironmentCandidate& prev,
                                           const AttemptHistory& history) {
        const auto& all = InterpreterVersion::supported();
        auto cur = std::find(all.begin(), all.end(), prev.interpreter.series);
        std::vector<std::string> ordered;
        for (size_t dist = 1; dist < all.size(); ++dist) {
            long i = cur - all.begin();
            if (i + static_cast<long>(dist) < static_cast<long>(all.size()))
                ordered.push_back(all[static_cast<size_t>(i + dist)]);
            if (i - static_cast<long>(dist) >= 0)
                ordered.push_back(all[static_cast<size_t>(i - dist)]);
        }
        for (const auto& series : ordered) {
            EnvironmentCandidate candidate{InterpreterVersion{series}, prev.pins};
            if (!history.contains(candidate.canonical_key())) return candidate;
        }
        throw CandidateSpaceExhaustedError("interpreter");
    }

    Gateway* gateway_;
    RegistryRetriever* retriever_;
    NameMapping mapping_;
    BuilderOptions options_;
};

}  // namespace envmend
