#pragma once

#include <atomic>
#include <thread>

#include <httplib.h>

namespace ptx::detail {

// httplib's default sets SO_REUSEPORT, which lets a second process bind a
// port that is already serving. Keep only SO_REUSEADDR so that fails.
inline void use_exclusive_port(httplib::Server& server) {
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
}

// httplib ignores stop() until listen has marked itself running, so a stop
// that races ahead of listen would leave listen blocked forever. This closes
// that window: a stop before listen makes listen return at once, and a stop
// during startup waits for the server to be running first.
class ListenGuard {
public:
    void listen(httplib::Server& server) {
        listening_ = true;
        if (!stop_requested_) server.listen_after_bind();
        listening_ = false;
    }

    void stop(httplib::Server& server) {
        stop_requested_ = true;
        while (listening_ && !server.is_running()) std::this_thread::yield();
        server.stop();
    }

private:
    std::atomic<bool> stop_requested_{false};
    std::atomic<bool> listening_{false};
};

}  // namespace ptx::detail
