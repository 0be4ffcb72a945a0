// envmend/subprocess.hpp - run a command, capture merged output, enforce a deadline
#pragma once

#include <chrono>
#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "envmend/errors.hpp"

namespace envmend {

struct CommandResult {
    int exit_code = -1;        // meaningful only when !timed_out && spawned
    bool timed_out = false;
    bool spawn_failed = false;
    std::string output;        // stdout and stderr interleaved, order-preserving
    double duration_seconds = 0.0;
};

/// Runs argv[0] with the given arguments. Both output streams share one pipe
/// so interleaving matches what a terminal would show. On deadline the whole
/// process group gets SIGKILL; partial output is kept.
inline CommandResult run_command(const std::vector<std::string>& argv, double timeout_seconds,
                                 const std::string& workdir = {}) {
    CommandResult result;
    if (argv.empty()) {
        result.spawn_failed = true;
        return result;
    }

    int pipefd[2];
    if (pipe(pipefd) != 0) {
        result.spawn_failed = true;
        return result;
    }

    auto start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) {
        close(pipefd[0]);
        close(pipefd[1]);
        result.spawn_failed = true;
        return result;
    }
    if (pid == 0) {
        setpgid(0, 0);  // own process group so the kill reaches children
        if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(pipefd[1], STDERR_FILENO);
        close(pipefd[0]);
        close(pipefd[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    close(pipefd[1]);
    fcntl(pipefd[0], F_SETFL, O_NONBLOCK);

    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(timeout_seconds));
    char buf[4096];
    bool open = true;
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
        }
        int wait_ms = result.timed_out
                          ? 100
                          : static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                 deadline - now)
                                                 .count()) +
                                1;
        if (wait_ms > 200) wait_ms = 200;
        struct pollfd pfd{pipefd[0], POLLIN, 0};
        int rc = poll(&pfd, 1, wait_ms);
        if (rc > 0) {
            ssize_t n;
            while ((n = read(pipefd[0], buf, sizeof buf)) > 0) result.output.append(buf, static_cast<size_t>(n));
            if (n == 0) open = false;
            if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) open = false;
        } else if (rc == 0 && result.timed_out) {
            // children killed; drain whatever is left and stop
            ssize_t n;
            while ((n = read(pipefd[0], buf, sizeof buf)) > 0) result.output.append(buf, static_cast<size_t>(n));
            open = false;
        }
    }
    close(pipefd[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    result.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!result.timed_out) {
        if (WIFEXITED(status))
            result.exit_code = WEXITSTATUS(status);
        else if (WIFSIGNALED(status))
            result.exit_code = 128 + WTERMSIG(status);
    }
    if (result.exit_code == 127 && result.output.empty()) result.spawn_failed = true;
    return result;
}

}  // namespace envmend
