// envmend/build_validator.hpp - candidate validation backends
//
// Two interchangeable validators: one drives a real container engine through
// its CLI, the other replays a fixture "world" document so every error path
// is reachable offline. Both emit logs the triage detectors classify the same
// way for equivalent scenarios.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "envmend/build_outcome.hpp"
#include "envmend/core_types.hpp"
#include "envmend/dockerfile_emitter.hpp"
#include "envmend/error_class.hpp"
#include "envmend/errors.hpp"
#include "envmend/subprocess.hpp"

#include "json.hpp"

namespace envmend {

struct ValidatorLimits {
    double build_timeout_seconds = 900;
    double run_timeout_seconds = 120;
    int concurrency = 4;
    bool early_cancel = true;  // first success cancels not-yet-started siblings
};

class Validator {
public:
    virtual ~Validator() = default;
    virtual BuildOutcome validate(const BuildRecipe& recipe) = 0;
    virtual const ValidatorLimits& limits() const = 0;

    /// Validates all recipes with bounded concurrency; outcomes come back in
    /// recipe order regardless of completion order. Tags must be distinct.
    std::vector<BuildOutcome> validate_parallel(const std::vector<BuildRecipe>& recipes) {
        std::set<std::string> tags;
        for (const auto& r : recipes)
            if (!tags.insert(r.container_tag).second)
                throw Error("duplicate container tag: " + r.container_tag);

        std::vector<BuildOutcome> outcomes(recipes.size());
        if (recipes.empty()) return outcomes;

        std::atomic<size_t> next{0};
        std::atomic<bool> cancelled{false};
        std::mutex error_mutex;
        std::exception_ptr engine_error;

        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= recipes.size()) return;
                if (cancelled.load()) {
                    BuildOutcome skipped;
                    skipped.phase = BuildPhase::build;
                    skipped.status = BuildStatus::failure;
                    skipped.log = "cancelled: a sibling candidate already succeeded";
                    skipped.candidate_key = recipes[i].candidate.canonical_key();
                    outcomes[i] = std::move(skipped);
                    continue;
                }
                try {
                    outcomes[i] = validate(recipes[i]);
                } catch (const EngineUnavailableError&) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!engine_error) engine_error = std::current_exception();
                    cancelled.store(true);
                    continue;
                }
                if (limits().early_cancel && outcomes[i].ok()) cancelled.store(true);
            }
        };

        size_t n_threads = std::min<size_t>(static_cast<size_t>(std::max(1, limits().concurrency)),
                                            recipes.size());
        std::vector<std::thread> threads;
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (engine_error) std::rethrow_exception(engine_error);
        return outcomes;
    }
};

// ---------------------------------------------------------------------------
// Simulated validator
// ---------------------------------------------------------------------------

/// Offline ground truth for repair scenarios. Per interpreter it records
/// which versions install and which version of each module actually works
/// ("*" = any); "transitive" adds modules a pinned module needs at runtime;
/// "syntax_error_on" marks series that reject the program outright. Scripted
/// per-key build/run failures and log templates override the synthesized
/// defaults. Loaded from world.json (format documented in the README).
struct WorldFixture {
    std::vector<std::string> interpreters;  // empty = all supported
    std::map<std::string, std::map<std::string, std::set<std::string>>> installable;
    std::map<std::string, std::map<std::string, std::string>> expected;  // interp -> module -> version
    std::map<std::string, std::vector<std::string>> transitive;          // module -> needed modules
    std::set<std::string> syntax_error_on;
    std::set<std::string> runnable_keys;  // explicit extra successes (e.g. zero-pin candidates)
    std::map<std::string, nlohmann::json> build_failures;  // canonical key -> scripted
    std::map<std::string, nlohmann::json> run_failures;    // canonical key -> scripted
    std::map<std::string, std::string> log_templates;      // class name -> template
    std::map<std::string, std::string> import_names;       // install name -> import name

    static WorldFixture from_json(const nlohmann::json& doc) {
        WorldFixture w;
        if (doc.contains("interpreters"))
            for (const auto& s : doc["interpreters"]) w.interpreters.push_back(s.get<std::string>());
        if (doc.contains("installable"))
            for (const auto& [interp, mods] : doc["installable"].items())
                for (const auto& [name, versions] : mods.items())
                    for (const auto& v : versions)
                        w.installable[interp][name].insert(v.get<std::string>());
        if (doc.contains("expected"))
            for (const auto& [interp, mods] : doc["expected"].items())
                for (const auto& [name, version] : mods.items())
                    w.expected[interp][name] = version.get<std::string>();
        if (doc.contains("transitive"))
            for (const auto& [name, deps] : doc["transitive"].items())
                for (const auto& d : deps)
                    w.transitive[name].push_back(d.get<std::string>());
        if (doc.contains("syntax_error_on"))
            for (const auto& s : doc["syntax_error_on"]) w.syntax_error_on.insert(s.get<std::string>());
        if (doc.contains("runnable"))
            for (const auto& k : doc["runnable"]) w.runnable_keys.insert(k.get<std::string>());
        if (doc.contains("build_failures"))
            for (const auto& [k, v] : doc["build_failures"].items()) w.build_failures[k] = v;
        if (doc.contains("run_failures"))
            for (const auto& [k, v] : doc["run_failures"].items()) w.run_failures[k] = v;
        if (doc.contains("log_templates"))
            for (const auto& [k, v] : doc["log_templates"].items())
                w.log_templates[k] = v.get<std::string>();
        if (doc.contains("import_names"))
            for (const auto& [k, v] : doc["import_names"].items())
                w.import_names[k] = v.get<std::string>();
        return w;
    }

    static WorldFixture load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("world fixture not found: " + path.string());
        return from_json(nlohmann::json::parse(in));
    }

    bool version_installable(const std::string& interp, const std::string& name,
                             const std::string& version) const {
        auto i = installable.find(interp);
        if (i == installable.end()) return false;
        auto m = i->second.find(name);
        if (m == i->second.end()) return false;
        return m->second.count(version) != 0 || m->second.count("*") != 0;
    }

    std::vector<std::string> installable_versions(const std::string& interp,
                                                  const std::string& name) const {
        std::vector<std::string> out;
        auto i = installable.find(interp);
        if (i == installable.end()) return out;
        auto m = i->second.find(name);
        if (m == i->second.end()) return out;
        out.assign(m->second.begin(), m->second.end());
        return out;
    }

    std::string import_name(const std::string& install_name) const {
        auto it = import_names.find(install_name);
        return it == import_names.end() ? install_name : it->second;
    }
};

/// Deterministic stand-in for the container engine, driven by a WorldFixture.
class SimulatedValidator : public Validator {
public:
    SimulatedValidator(WorldFixture world, ValidatorLimits limits = {})
        : world_(std::move(world)), limits_(limits) {}

    const ValidatorLimits& limits() const override { return limits_; }
    const WorldFixture& world() const { return world_; }

    BuildOutcome validate(const BuildRecipe& recipe) override {
        const auto& cand = recipe.candidate;
        const std::string key = cand.canonical_key();
        const std::string& interp = cand.interpreter.series;

        if (!world_.interpreters.empty() &&
            std::find(world_.interpreters.begin(), world_.interpreters.end(), interp) ==
                world_.interpreters.end()) {
            return outcome(BuildPhase::build, BuildStatus::failure, 1,
                           "ERROR: manifest for python:" + interp + " not found", key, 0.01);
        }

        // build phase: one layer per pin, first miss aborts the build
        for (const auto& pin : cand.pins) {
            if (!world_.version_installable(interp, pin.install_name, *pin.version)) {
                std::map<std::string, std::string> vars = {
                    {"module", pin.install_name},
                    {"version", *pin.version},
                    {"available", join(world_.installable_versions(interp, pin.install_name), ", ")},
                };
                return outcome(BuildPhase::build, BuildStatus::failure, 1,
                               render_template(ErrorClass::VersionNotFound, vars), key, 0.01);
            }
        }
        if (auto it = world_.build_failures.find(key); it != world_.build_failures.end())
            return scripted(BuildPhase::build, it->second, key);

        // run phase
        if (auto it = world_.run_failures.find(key); it != world_.run_failures.end())
            return scripted(BuildPhase::run, it->second, key);
        return run_phase(cand, key);
    }

private:
    BuildOutcome outcome(BuildPhase phase, BuildStatus status, std::optional<int> exit_code,
                         std::string log, std::string key, double duration) const {
        BuildOutcome o;
        o.phase = phase;
        o.status = status;
        o.exit_code = exit_code;
        o.log = std::move(log);
        o.candidate_key = std::move(key);
        o.duration_seconds = duration;
        return o;
    }

    BuildOutcome success(const std::string& key) const {
        return outcome(BuildPhase::run, BuildStatus::success, 0,
                       "Successfully installed all pinned modules\nprogram finished\n", key, 0.02);
    }

    BuildOutcome run_phase(const EnvironmentCandidate& cand, const std::string& key) const {
        if (world_.runnable_keys.count(key)) return success(key);

        const std::string& interp = cand.interpreter.series;
        if (world_.syntax_error_on.count(interp))
            return outcome(BuildPhase::run, BuildStatus::failure, 1,
                           render_template(ErrorClass::SyntaxError, {{"line", "1"}}), key, 0.02);

        // a pinned module may need others at runtime (transitive requirement)
        for (const auto& pin : cand.pins) {
            auto deps = world_.transitive.find(pin.install_name);
            if (deps == world_.transitive.end()) continue;
            for (const auto& dep : deps->second) {
                if (!cand.find_pin(dep))
                    return outcome(BuildPhase::run, BuildStatus::failure, 1,
                                   render_template(ErrorClass::ModuleNotFound,
                                                   {{"import", world_.import_name(dep)}}),
                                   key, 0.02);
            }
        }

        // every pin must match the version that actually works on this series
        auto table = world_.expected.find(interp);
        for (const auto& pin : cand.pins) {
            const std::string* want = nullptr;
            if (table != world_.expected.end()) {
                auto it = table->second.find(pin.install_name);
                if (it != table->second.end()) want = &it->second;
            }
            if (!want || (*want != "*" && *want != *pin.version)) {
                return outcome(BuildPhase::run, BuildStatus::failure, 1,
                               render_template(ErrorClass::ImportError,
                                               {{"import", world_.import_name(pin.install_name)},
                                                {"series", interp}}),
                               key, 0.02);
            }
        }
        if (!cand.pins.empty()) return success(key);
        return outcome(BuildPhase::run, BuildStatus::failure, 1,
                       render_template(ErrorClass::NonZeroCode, {}), key, 0.02);
    }

    BuildOutcome scripted(BuildPhase phase, const nlohmann::json& spec, const std::string& key) const {
        if (spec.value("timeout", false)) {
            double limit = phase == BuildPhase::build ? limits_.build_timeout_seconds
                                                      : limits_.run_timeout_seconds;
            return outcome(phase, BuildStatus::timeout, std::nullopt,
                           spec.value("log", std::string("(no output before the deadline)")), key,
                           limit);
        }
        std::string cls_name = spec.value("class", std::string("NonZeroCode"));
        std::map<std::string, std::string> vars;
        for (const auto& [k, v] : spec.items())
            if (v.is_string()) vars[k] = v.get<std::string>();
        if (spec.contains("modules") && spec["modules"].is_array()) {
            auto& mods = spec["modules"];
            if (mods.size() > 0) vars["module_a"] = mods[0].get<std::string>();
            if (mods.size() > 1) vars["module_b"] = mods[1].get<std::string>();
        }
        auto cls = error_class_from_string(cls_name).value_or(ErrorClass::NonZeroCode);
        int exit_code = spec.value("exit_code", 1);
        std::string log = spec.contains("log") ? spec["log"].get<std::string>()
                                               : render_template(cls, vars);
        return outcome(phase, BuildStatus::failure, exit_code, log, key, 0.02);
    }

    std::string render_template(ErrorClass cls, const std::map<std::string, std::string>& vars) const {
        std::string tmpl;
        if (auto it = world_.log_templates.find(to_string(cls)); it != world_.log_templates.end())
            tmpl = it->second;
        else
            tmpl = default_template(cls);
        for (const auto& [k, v] : vars) {
            std::string marker = "{" + k + "}";
            size_t pos;
            while ((pos = tmpl.find(marker)) != std::string::npos)
                tmpl.replace(pos, marker.size(), v);
        }
        return tmpl;
    }

    static std::string default_template(ErrorClass cls) {
        switch (cls) {
            case ErrorClass::VersionNotFound:
                return "Collecting {module}=={version}\n"
                       "ERROR: Could not find a version that satisfies the requirement "
                       "{module}=={version} (from versions: {available})\n"
                       "ERROR: No matching distribution found for {module}=={version}\n";
            case ErrorClass::InvalidVersion:
                return "ERROR: Invalid requirement: '{module}=={version}'\n";
            case ErrorClass::DependencyConflict:
                return "ERROR: Cannot install {module_a} and {module_b} because these package "
                       "versions have conflicting dependencies.\n"
                       "The conflict is caused by:\n"
                       "    The user requested {module_a}\n"
                       "    The user requested {module_b}\n";
            case ErrorClass::ModuleNotFound:
                return "Traceback (most recent call last):\n"
                       "  File \"/app/snippet.py\", line 1, in <module>\n"
                       "    import {import}\n"
                       "ModuleNotFoundError: No module named '{import}'\n";
            case ErrorClass::ImportError:
                return "Traceback (most recent call last):\n"
                       "  File \"/app/snippet.py\", line 2, in <module>\n"
                       "    from {import} import main\n"
                       "ImportError: cannot import name 'main' from '{import}' "
                       "(/usr/local/lib/python{series}/site-packages/{import}/__init__.py)\n";
            case ErrorClass::AttributeError:
                return "Traceback (most recent call last):\n"
                       "  File \"/app/snippet.py\", line 3, in <module>\n"
                       "    {import}.{attribute}()\n"
                       "AttributeError: module '{import}' has no attribute '{attribute}'\n";
            case ErrorClass::SyntaxError:
                return "  File \"/app/snippet.py\", line {line}\n"
                       "    print \"hello\"\n"
                       "                ^\n"
                       "SyntaxError: invalid syntax\n";
            case ErrorClass::NonZeroCode:
                return "Traceback (most recent call last):\n"
                       "  File \"/app/snippet.py\", line 9, in <module>\n"
                       "    main()\n"
                       "RuntimeError: unhandled application error\n";
        }
        return "unexpected failure\n";
    }

    WorldFixture world_;
    ValidatorLimits limits_;
};

// ---------------------------------------------------------------------------
// Container validator
// ---------------------------------------------------------------------------

/// Drives the container engine CLI: build the image, run it, tear both down.
class ContainerValidator : public Validator {
public:
    ContainerValidator(std::string snippet_content, ValidatorLimits limits = {},
                       std::string engine_binary = "docker",
                       std::filesystem::path scratch_root = std::filesystem::temp_directory_path())
        : snippet_content_(std::move(snippet_content)),
          limits_(limits),
          engine_(std::move(engine_binary)),
          scratch_root_(std::move(scratch_root)) {}

    const ValidatorLimits& limits() const override { return limits_; }

    BuildOutcome validate(const BuildRecipe& recipe) override {
        ensure_engine();
        const std::string key = recipe.candidate.canonical_key();

        std::filesystem::path dir = make_scratch_dir(recipe.container_tag);
        struct Cleanup {
            std::filesystem::path dir;
            ~Cleanup() {
                std::error_code ec;
                std::filesystem::remove_all(dir, ec);
            }
        } cleanup{dir};

        {
            std::ofstream df(dir / "Dockerfile", std::ios::binary);
            df << emit_dockerfile(recipe);
            std::ofstream sf(dir / recipe.snippet_filename, std::ios::binary);
            sf << snippet_content_;
        }

        auto build = run_command({engine_, "build", "-t", recipe.container_tag, dir.string()},
                                 limits_.build_timeout_seconds);
        if (build.spawn_failed) throw EngineUnavailableError("cannot invoke " + engine_);
        if (build.timed_out)
            return finish(recipe, BuildPhase::build, BuildStatus::timeout, std::nullopt,
                          build.output, key, build.duration_seconds);
        if (build.exit_code != 0)
            return finish(recipe, BuildPhase::build, BuildStatus::failure, build.exit_code,
                          build.output, key, build.duration_seconds);

        std::string run_name = recipe.container_tag + "-run";
        auto run = run_command({engine_, "run", "--rm", "--name", run_name, recipe.container_tag},
                               limits_.run_timeout_seconds);
        if (run.timed_out) {
            run_command({engine_, "rm", "-f", run_name}, 30);
            return finish(recipe, BuildPhase::run, BuildStatus::timeout, std::nullopt, run.output,
                          key, run.duration_seconds);
        }
        BuildStatus status = run.exit_code == 0 ? BuildStatus::success : BuildStatus::failure;
        return finish(recipe, BuildPhase::run, status, run.exit_code, run.output, key,
                      run.duration_seconds);
    }

private:
    void ensure_engine() {
        std::lock_guard<std::mutex> lock(probe_mutex_);
        if (probed_) {
            if (!engine_ok_) throw EngineUnavailableError("container engine unavailable: " + engine_);
            return;
        }
        auto probe = run_command({engine_, "version"}, 30);
        probed_ = true;
        engine_ok_ = !probe.spawn_failed && !probe.timed_out && probe.exit_code == 0;
        if (!engine_ok_) throw EngineUnavailableError("container engine unavailable: " + engine_);
    }

    std::filesystem::path make_scratch_dir(const std::string& tag) {
        auto dir = scratch_root_ / ("envmend-build-" + fnv1a64_hex(tag));
        std::filesystem::create_directories(dir);
        return dir;
    }

    BuildOutcome finish(const BuildRecipe& recipe, BuildPhase phase, BuildStatus status,
                        std::optional<int> exit_code, std::string log, const std::string& key,
                        double duration) {
        run_command({engine_, "rmi", "-f", recipe.container_tag}, 60);  // best effort
        BuildOutcome o;
        o.phase = phase;
        o.status = status;
        o.exit_code = exit_code;
        o.log = std::move(log);
        o.candidate_key = key;
        o.duration_seconds = duration;
        return o;
    }

    std::string snippet_content_;
    ValidatorLimits limits_;
    std::string engine_;
    std::filesystem::path scratch_root_;
    std::mutex probe_mutex_;
    bool probed_ = false;
    bool engine_ok_ = false;
};

}  // namespace envmend
