// envmend - infer a working Python environment for a broken single-file script
//
//   envmend repair snippet.py [--model gemma2 --temp 0.7 --loop 10 --range 1 --rag true ...]
//   envmend bench <dir> --runs 3 [...]
//
// Exit codes: 0 repaired, 1 not repaired, 2 usage error, 3 aborted
// (backend or container engine unavailable).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "envmend/envmend.hpp"

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace envmend;

namespace {

struct CommonFlags {
    std::string model = "gemma2";
    double temp = 0.7;
    int loop = 10;
    int range = 1;
    bool rag = true;
    std::string backend_url;
    std::string validator = "container";
    std::string backend = "auto";  // auto|http|stub|transcript
    std::string stub_mode = "schedule";  // schedule|seeded
    fs::path fixtures;
    fs::path out = "envmend-out";
    std::optional<int64_t> seed;
    int jobs = 2;
    std::string registry_url = "https://pypi.org";
    fs::path cache_dir;
    fs::path data_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--model", f.model, "model name passed to the text backend");
    cmd->add_option("--temp", f.temp, "sampling temperature")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--loop", f.loop, "repair cycle budget")->check(CLI::PositiveNumber);
    cmd->add_option("--range", f.range, "interpreter neighborhood radius")->check(CLI::Range(0, 3));
    cmd->add_option("--rag", f.rag, "ground version selection in registry metadata");
    cmd->add_option("--backend-url", f.backend_url, "text-generation service base URL");
    cmd->add_option("--validator", f.validator, "candidate validator")
        ->check(CLI::IsMember({"container", "simulated"}));
    cmd->add_option("--backend", f.backend, "text backend kind")
        ->check(CLI::IsMember({"auto", "http", "stub", "transcript"}));
    cmd->add_option("--stub-mode", f.stub_mode, "stub version picking policy")
        ->check(CLI::IsMember({"schedule", "seeded"}));
    cmd->add_option("--fixtures", f.fixtures, "fixture world directory (simulated mode)");
    cmd->add_option("--out", f.out, "report output directory");
    cmd->add_option("--seed", f.seed, "base random seed");
    cmd->add_option("--jobs", f.jobs, "parallel corpus files")->check(CLI::PositiveNumber);
    cmd->add_option("--registry-url", f.registry_url, "package index base URL");
    cmd->add_option("--cache-dir", f.cache_dir, "registry metadata cache directory");
    cmd->add_option("--data-dir", f.data_dir, "stdlib lists and name mapping directory");
}

fs::path resolve_data_dir(const CommonFlags& f) {
    if (!f.data_dir.empty()) return f.data_dir;
    if (const char* env = std::getenv("ENVMEND_DATA_DIR")) return env;
#ifdef ENVMEND_DEFAULT_DATA_DIR
    return ENVMEND_DEFAULT_DATA_DIR;
#else
    return "data";
#endif
}

std::string resolve_backend_url(const CommonFlags& f) {
    if (!f.backend_url.empty()) return f.backend_url;
    if (const char* env = std::getenv("ENVMEND_BACKEND_URL")) return env;
    return "http://localhost:11434";
}

std::optional<fs::path> resolve_cache_dir(const CommonFlags& f) {
    if (!f.cache_dir.empty()) return f.cache_dir;
    if (const char* env = std::getenv("ENVMEND_CACHE_DIR")) return fs::path(env);
    if (const char* home = std::getenv("HOME")) return fs::path(home) / ".cache" / "envmend";
    return std::nullopt;
}

struct Pipeline {
    std::unique_ptr<TextBackend> backend;
    std::unique_ptr<RegistrySource> registry;
    std::unique_ptr<RegistryRetriever> retriever;
    std::unique_ptr<Validator> validator;
    std::unique_ptr<Gateway> gateway;
    StdlibIndex stdlib;
    NameMapping mapping;
};

Pipeline build_pipeline(const CommonFlags& f, const SourceFile& snippet) {
    Pipeline p;

    fs::path data_dir = resolve_data_dir(f);
    p.stdlib = StdlibIndex::load(data_dir / "stdlib");
    if (!p.stdlib.has_series("3.6"))
        throw Error("stdlib lists not found under " + (data_dir / "stdlib").string());
    p.mapping = load_name_mapping(data_dir / "name_mapping.json");

    bool simulated = f.validator == "simulated";
    std::string backend_kind = f.backend;
    if (backend_kind == "auto") backend_kind = simulated ? "stub" : "http";

    if (backend_kind == "http") {
        p.backend = std::make_unique<HttpTextBackend>(HttpBackendConfig{resolve_backend_url(f)});
    } else if (backend_kind == "transcript") {
        p.backend = std::make_unique<TranscriptBackend>(f.fixtures / "transcripts");
    } else {
        StubConfig cfg;
        cfg.stochastic = f.stub_mode == "seeded";
        p.backend = std::make_unique<DeterministicStubBackend>(cfg);
    }
    p.gateway = std::make_unique<Gateway>(*p.backend);

    RetrieverOptions ropts;
    if (simulated) {
        if (f.fixtures.empty()) throw Error("--validator simulated requires --fixtures <dir>");
        p.registry = std::make_unique<FixtureRegistrySource>(f.fixtures / "registry");
    } else {
        p.registry = std::make_unique<HttpRegistrySource>(f.registry_url);
        ropts.cache_dir = resolve_cache_dir(f);
    }
    p.retriever = std::make_unique<RegistryRetriever>(*p.registry, ropts);

    ValidatorLimits limits;
    if (simulated) {
        p.validator = std::make_unique<SimulatedValidator>(
            WorldFixture::load(f.fixtures / "world.json"), limits);
    } else {
        p.validator = std::make_unique<ContainerValidator>(snippet.content, limits);
    }
    return p;
}

LoopConfig loop_config(const CommonFlags& f) {
    LoopConfig cfg;
    cfg.loop_budget = f.loop;
    cfg.range = f.range;
    cfg.rag = f.rag;
    cfg.temperature = f.temp;
    cfg.model_name = f.model;
    cfg.seed = f.seed;
    return cfg;
}

int cmd_repair(const CommonFlags& f, const fs::path& path) {
    if (!fs::exists(path)) {
        std::cerr << "error: no such file: " << path << "\n";
        return 2;
    }
    SourceFile file = SourceFile::read(path);
    Pipeline p = build_pipeline(f, file);
    RepairEngine engine(*p.gateway, *p.retriever, *p.validator, p.stdlib, p.mapping);

    fs::create_directories(f.out);
    TraceWriter trace(f.out / (path.stem().string() + ".trace.jsonl"));
    RepairResult result = engine.repair(file, loop_config(f), &trace);

    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "status: " << to_string(result.status) << "\n";
    std::cout << "iterations: " << result.iterations_used << "\n";
    std::cout << "wall time: " << result.wall_time_seconds << " s\n";
    if (result.status == RepairStatus::fixed) {
        const auto& cand = *result.winning_candidate;
        std::cout << "environment: " << cand.canonical_key() << "\n";
        BuildRecipe recipe{cand, "snippet.py", 100, make_container_tag("final", cand)};
        fs::path df = f.out / (path.stem().string() + ".Dockerfile");
        std::ofstream out(df, std::ios::binary | std::ios::trunc);
        out << emit_dockerfile(recipe);
        std::cout << "build file: " << df.string() << "\n";
        return 0;
    }
    if (result.status == RepairStatus::aborted) {
        std::cerr << "aborted: " << result.failure_reason << "\n";
        return 3;
    }
    return 1;
}

int cmd_bench(const CommonFlags& f, const fs::path& dir, int runs) {
    if (!fs::is_directory(dir)) {
        std::cerr << "error: no such corpus directory: " << dir << "\n";
        return 2;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".py")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "error: corpus directory has no .py files: " << dir << "\n";
        return 2;
    }

    CorpusOptions options;
    options.runs = runs;
    options.jobs = f.jobs;
    options.base_seed = f.seed.value_or(0);
    options.out_dir = f.out;
    options.corpus_id = dir.filename().string();

    auto repair_file = [&](const fs::path& path, int run_index, int64_t seed) {
        SourceFile file = SourceFile::read(path);
        Pipeline p = build_pipeline(f, file);
        RepairEngine engine(*p.gateway, *p.retriever, *p.validator, p.stdlib, p.mapping);
        LoopConfig cfg = loop_config(f);
        cfg.seed = seed;
        char run_dir[32];
        std::snprintf(run_dir, sizeof run_dir, "run-%03d", run_index);
        TraceWriter trace(f.out / run_dir / (path.stem().string() + ".trace.jsonl"));
        return engine.repair(file, cfg, &trace);
    };

    CorpusResult result = run_corpus(files, repair_file, options);
    const RunReport& last = result.run_reports.back();
    std::cout << "runs: " << result.cumulative.runs << "\n";
    std::cout << "last run fixed/unfixed/aborted: " << last.totals.fixed << "/"
              << last.totals.unfixed << "/" << last.totals.aborted << "\n";
    std::cout << "cumulative unique fixes:";
    for (size_t n : result.cumulative.unique_fixed_by_prefix) std::cout << " " << n;
    std::cout << "\nreports: " << f.out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"infer a working Python runtime environment for a broken script"};
    app.require_subcommand(1);

    CommonFlags repair_flags;
    fs::path repair_path;
    CLI::App* repair = app.add_subcommand("repair", "repair one Python file");
    repair->add_option("path", repair_path, "Python source file")->required();
    add_common_flags(repair, repair_flags);

    CommonFlags bench_flags;
    fs::path bench_dir;
    int bench_runs = 1;
    CLI::App* bench = app.add_subcommand("bench", "repair every file in a corpus, repeatedly");
    bench->add_option("dir", bench_dir, "corpus directory of .py files")->required();
    bench->add_option("--runs", bench_runs, "independent repeated runs")->check(CLI::PositiveNumber);
    add_common_flags(bench, bench_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (repair->parsed()) return cmd_repair(repair_flags, repair_path);
        if (bench->parsed()) return cmd_bench(bench_flags, bench_dir, bench_runs);
    } catch (const EngineUnavailableError& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 3;
    } catch (const BackendError& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
