// envmend/bench.hpp - corpus benchmarking, scoring, report aggregation
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "envmend/build_outcome.hpp"
#include "envmend/error_triage.hpp"
#include "envmend/repair_loop.hpp"

#include "json.hpp"

namespace envmend {

// ---------------------------------------------------------------------------
// Outcome scoring
// ---------------------------------------------------------------------------

enum class ScoreMode { strict, lenient };

/// Fix criterion: the run completed without any of the four critical runtime
/// errors. Strict mode additionally demands a zero exit code; lenient mode
/// accepts a non-zero exit as long as no critical class appears.
inline bool score_outcome_fixed(const BuildOutcome& outcome, ScoreMode mode = ScoreMode::strict) {
    if (outcome.phase != BuildPhase::run) return false;
    if (outcome.status == BuildStatus::timeout) return false;
    if (mode == ScoreMode::strict && outcome.exit_code != 0) return false;
    auto classes = detect_classes(outcome.log);
    return !classes.count(ErrorClass::ImportError) && !classes.count(ErrorClass::ModuleNotFound) &&
           !classes.count(ErrorClass::AttributeError) && !classes.count(ErrorClass::SyntaxError);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct FileReport {
    std::string file_id;
    RepairStatus status = RepairStatus::unfixed;
    int iterations = 0;
    double wall_time_seconds = 0.0;
    std::optional<std::string> winning_key;
};

struct RunTotals {
    int fixed = 0;
    int unfixed = 0;
    int aborted = 0;
};

struct TimingStats {
    double mean = 0.0;
    double iqr = 0.0;
    size_t count = 0;
};

struct RunReport {
    std::string corpus_id;
    int run_index = 0;
    std::vector<FileReport> per_file;
    RunTotals totals;
    TimingStats fix_times;  // over fixed files only

    static RunTotals compute_totals(const std::vector<FileReport>& per_file) {
        RunTotals t;
        for (const auto& f : per_file) {
            if (f.status == RepairStatus::fixed) ++t.fixed;
            else if (f.status == RepairStatus::unfixed) ++t.unfixed;
            else ++t.aborted;
        }
        return t;
    }

    static TimingStats compute_fix_times(const std::vector<FileReport>& per_file) {
        std::vector<double> times;
        for (const auto& f : per_file)
            if (f.status == RepairStatus::fixed) times.push_back(f.wall_time_seconds);
        TimingStats stats;
        stats.count = times.size();
        if (times.empty()) return stats;
        double sum = 0;
        for (double t : times) sum += t;
        stats.mean = sum / static_cast<double>(times.size());
        std::sort(times.begin(), times.end());
        stats.iqr = quantile(times, 0.75) - quantile(times, 0.25);
        return stats;
    }

    void finalize() {
        totals = compute_totals(per_file);
        fix_times = compute_fix_times(per_file);
    }

    /// Linear-interpolation quantile over a sorted sample.
    static double quantile(const std::vector<double>& sorted, double p) {
        if (sorted.empty()) return 0.0;
        if (sorted.size() == 1) return sorted[0];
        double h = (static_cast<double>(sorted.size()) - 1.0) * p;
        size_t lo = static_cast<size_t>(std::floor(h));
        size_t hi = std::min(lo + 1, sorted.size() - 1);
        double frac = h - static_cast<double>(lo);
        return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
    }
};

/// Union growth of fixed file ids across runs (entry k covers runs 1..k+1).
struct CumulativeReport {
    int runs = 0;
    std::vector<size_t> unique_fixed_by_prefix;

    static CumulativeReport from_runs(const std::vector<RunReport>& reports) {
        CumulativeReport out;
        out.runs = static_cast<int>(reports.size());
        std::set<std::string> seen;
        for (const auto& report : reports) {
            for (const auto& f : report.per_file)
                if (f.status == RepairStatus::fixed) seen.insert(f.file_id);
            out.unique_fixed_by_prefix.push_back(seen.size());
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Corpus runner
// ---------------------------------------------------------------------------

struct CorpusOptions {
    int runs = 1;
    int jobs = 2;
    int64_t base_seed = 0;
    std::optional<std::filesystem::path> out_dir;  // unset: keep reports in memory only
    std::string corpus_id = "corpus";
};

struct CorpusResult {
    std::vector<RunReport> run_reports;
    CumulativeReport cumulative;
};

/// Repairs one file: (path, run index, seed) -> result. The runner owns
/// nothing about backends; the caller wires the engine in.
using RepairFileFn =
    std::function<RepairResult(const std::filesystem::path&, int run_index, int64_t seed)>;

namespace detail {

inline nlohmann::json file_report_json(const FileReport& f) {
    nlohmann::json j = {{"file", f.file_id},
                        {"status", to_string(f.status)},
                        {"iterations", f.iterations},
                        {"wall_time_seconds", f.wall_time_seconds}};
    if (f.winning_key) j["winning_key"] = *f.winning_key;
    return j;
}

inline void write_run_report(const std::filesystem::path& dir, const RunReport& report) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.jsonl", std::ios::trunc);
        for (const auto& f : report.per_file) out << file_report_json(f).dump() << '\n';
        nlohmann::json totals = {{"record", "totals"},
                                 {"fixed", report.totals.fixed},
                                 {"unfixed", report.totals.unfixed},
                                 {"aborted", report.totals.aborted},
                                 {"fix_time_mean", report.fix_times.mean},
                                 {"fix_time_iqr", report.fix_times.iqr}};
        out << totals.dump() << '\n';
    }
    std::ofstream out(dir / "summary.txt", std::ios::trunc);
    out << "corpus: " << report.corpus_id << "  run: " << report.run_index << "\n";
    out << "fixed: " << report.totals.fixed << "  unfixed: " << report.totals.unfixed
        << "  aborted: " << report.totals.aborted << "\n";
    char line[128];
    std::snprintf(line, sizeof line, "fix time mean: %.3f s  IQR: %.3f s  (n=%zu)\n",
                  report.fix_times.mean, report.fix_times.iqr, report.fix_times.count);
    out << line;
    out << "file                           status    iters   time(s)\n";
    for (const auto& f : report.per_file) {
        std::snprintf(line, sizeof line, "%-30s %-9s %5d %9.3f\n", f.file_id.c_str(),
                      to_string(f.status).c_str(), f.iterations, f.wall_time_seconds);
        out << line;
    }
}

}  // namespace detail

/// Repairs every file `runs` times with per-run seeds (base + run index),
/// bounded file parallelism inside a run, and per-run plus cumulative reports.
inline CorpusResult run_corpus(const std::vector<std::filesystem::path>& files,
                               const RepairFileFn& repair_file, const CorpusOptions& options) {
    if (files.empty()) throw Error("corpus directory contains no source files");
    CorpusResult result;

    for (int run = 1; run <= options.runs; ++run) {
        RunReport report;
        report.corpus_id = options.corpus_id;
        report.run_index = run;
        report.per_file.resize(files.size());
        int64_t seed = options.base_seed + run;

        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= files.size()) return;
                FileReport fr;
                fr.file_id = files[i].filename().string();
                try {
                    RepairResult r = repair_file(files[i], run, seed);
                    fr.status = r.status;
                    fr.iterations = r.iterations_used;
                    fr.wall_time_seconds = r.wall_time_seconds;
                    if (r.winning_candidate) fr.winning_key = r.winning_candidate->canonical_key();
                } catch (const Error&) {
                    fr.status = RepairStatus::aborted;
                }
                report.per_file[i] = std::move(fr);
            }
        };
        size_t n_threads = std::min<size_t>(static_cast<size_t>(std::max(1, options.jobs)),
                                            files.size());
        std::vector<std::thread> threads;
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();

        report.finalize();
        if (options.out_dir) {
            char run_dir[32];
            std::snprintf(run_dir, sizeof run_dir, "run-%03d", run);
            detail::write_run_report(*options.out_dir / run_dir, report);
        }
        result.run_reports.push_back(std::move(report));
    }

    result.cumulative = CumulativeReport::from_runs(result.run_reports);
    if (options.out_dir) {
        std::filesystem::create_directories(*options.out_dir);
        nlohmann::json j = {{"runs", result.cumulative.runs},
                            {"unique_fixed_by_prefix", result.cumulative.unique_fixed_by_prefix}};
        std::ofstream out(*options.out_dir / "cumulative.json", std::ios::trunc);
        out << j.dump(2) << '\n';
    }
    return result;
}

}  // namespace envmend
