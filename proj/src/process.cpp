#include "satnn/process.hpp"

#include "satnn/errors.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace satnn {

namespace {

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fds, O_CLOEXEC) != 0) throw EnvironmentError(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe() {
        for (int fd : fds)
            if (fd >= 0) ::close(fd);
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
    void close_end(int i) {
        if (fds[i] >= 0) ::close(fds[i]);
        fds[i] = -1;
    }
};

struct SpawnActions {
    posix_spawn_file_actions_t actions;
    SpawnActions() { posix_spawn_file_actions_init(&actions); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions); }
};

struct SpawnAttrs {
    posix_spawnattr_t attrs;
    SpawnAttrs() { posix_spawnattr_init(&attrs); }
    ~SpawnAttrs() { posix_spawnattr_destroy(&attrs); }
};

} // namespace

ProcessOutcome run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout) {
    if (argv.empty()) throw EnvironmentError("empty command line");
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();

    Pipe out;
    SpawnActions actions;
    posix_spawn_file_actions_adddup2(&actions.actions, out.fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addopen(&actions.actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
    SpawnAttrs attrs;
    // Own process group so a timeout kill reaches any grandchildren.
    posix_spawnattr_setflags(&attrs.attrs, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attrs.attrs, 0);

    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, cargv[0], &actions.actions, &attrs.attrs, cargv.data(), environ);
    if (rc != 0) throw EnvironmentError("cannot start '" + argv[0] + "': " + std::strerror(rc));
    out.close_end(1);

    ProcessOutcome outcome;
    const auto deadline = start + timeout;
    char buf[1 << 16];
    bool open = true;
    while (open) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) {
            outcome.timed_out = true;
            break;
        }
        pollfd pfd{out.fds[0], POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
        if (ready < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (ready == 0) continue;
        const ssize_t n = ::read(out.fds[0], buf, sizeof buf);
        if (n > 0)
            outcome.stdout_text.append(buf, static_cast<std::size_t>(n));
        else if (n == 0 || errno != EINTR)
            open = false;
    }

    int status = 0;
    if (outcome.timed_out) {
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
        }
    } else {
        // stdout closed; the child may still be exiting.
        while (true) {
            const pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid) break;
            if (w < 0 && errno != EINTR) break;
            if (Clock::now() >= deadline) {
                outcome.timed_out = true;
                ::kill(-pid, SIGKILL);
                ::kill(pid, SIGKILL);
                while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
                }
                break;
            }
            ::usleep(1000);
        }
    }
    if (!outcome.timed_out) outcome.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    outcome.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return outcome;
}

} // namespace satnn
