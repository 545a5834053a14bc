#include "robokey/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

namespace robokey {

namespace {

constexpr const char* kEndLine = "END\n";

[[noreturn]] void sys_fail(const std::string& what) {
    throw transport_error(what + ": " + std::strerror(errno));
}

/// Minimal RAII socket with line framing.
class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    LineSocket(LineSocket&& other) noexcept
        : fd_(std::exchange(other.fd_, -1)), buf_(std::move(other.buf_)) {}
    LineSocket& operator=(LineSocket&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = std::exchange(other.fd_, -1);
            buf_ = std::move(other.buf_);
        }
        return *this;
    }
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;
    ~LineSocket() { close_fd(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close_fd() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    void send_line(const std::string& line) {
        std::size_t sent = 0;
        while (sent < line.size()) {
            const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                sys_fail("socket send");
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    /// Blocking read up to and including '\n'. Empty return means EOF.
    std::string recv_line() {
        for (;;) {
            const auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl + 1);
                buf_.erase(0, nl + 1);
                return line;
            }
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                sys_fail("socket recv");
            }
            if (n == 0) return {};
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    /// True if any unsolicited data is pending (read-only enforcement).
    bool has_pending_data() {
        if (!buf_.empty()) return true;
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 0);
        if (rc <= 0) return false;
        char chunk[256];
        const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), MSG_DONTWAIT);
        if (n > 0) buf_.append(chunk, static_cast<std::size_t>(n));
        return n > 0;
    }

private:
    int fd_ = -1;
    std::string buf_;
};

LineSocket connect_to(const Endpoint& ep) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) sys_fail("socket");
    LineSocket sock(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
        throw transport_error("bad address: " + ep.host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        sys_fail("connect to " + ep.host + ":" + std::to_string(ep.port));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return sock;
}

Message decode_or_fail(const std::string& line) {
    auto msg = decode_message(line);
    if (!msg) throw transport_error("unexpected blank record");
    return *msg;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("endpoint must be host:port");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    if (ep.host.empty()) ep.host = "127.0.0.1";
    const unsigned long port = std::stoul(text.substr(colon + 1));
    if (port > 65535) throw std::invalid_argument("port out of range");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

Transcript serve_robot(const Endpoint& ep, RobotParty& robot,
                       const std::function<void(std::uint16_t)>& on_bound) {
    const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (lfd < 0) sys_fail("socket");
    LineSocket listener(lfd);
    const int one = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
        throw transport_error("bad address: " + ep.host);
    }
    if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        sys_fail("bind " + ep.host + ":" + std::to_string(ep.port));
    }
    if (::listen(lfd, 2) < 0) sys_fail("listen");
    if (on_bound) {
        sockaddr_in bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(lfd, reinterpret_cast<sockaddr*>(&bound), &len);
        on_bound(ntohs(bound.sin_port));
    }

    LineSocket controller, tap;
    while (!controller.valid() || !tap.valid()) {
        const int cfd = ::accept(lfd, nullptr, nullptr);
        if (cfd < 0) {
            if (errno == EINTR) continue;
            sys_fail("accept");
        }
        LineSocket peer(cfd);
        ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        const std::string hello = peer.recv_line();
        if (hello == "ROLE,controller\n" && !controller.valid()) {
            controller = std::move(peer);
        } else if (hello == "ROLE,tap\n" && !tap.valid()) {
            tap = std::move(peer);
        }
        // anything else: connection dropped by peer going out of scope
    }

    // mirroring is best effort: losing the passive tap must not abort the
    // session between the principals
    auto mirror = [&tap](const std::string& line) {
        if (!tap.valid()) return;
        try {
            tap.send_line(line);
        } catch (const transport_error&) {
            tap.close_fd();
        }
    };

    Transcript transcript;
    for (;;) {
        const std::string line = controller.recv_line();
        if (line.empty() || line == kEndLine) break;  // session end or abort
        const Message msg = decode_or_fail(line);
        const auto* cm = std::get_if<ControlMessage>(&msg);
        if (!cm) throw transport_error("expected a control record");
        transcript.records.push_back(msg);
        mirror(line);

        const MeasurementMessage mm = robot.on_control(*cm);
        const std::string out = encode_message(Message{mm});
        transcript.records.emplace_back(mm);
        controller.send_line(out);
        // read-only contract: a tap that writes is disconnected
        if (tap.valid() && tap.has_pending_data()) {
            tap.close_fd();
        } else {
            mirror(out);
        }
    }
    mirror(kEndLine);
    return transcript;
}

void run_controller_client(const Endpoint& ep, ControllerParty& controller,
                           Transcript& out) {
    LineSocket sock = connect_to(ep);
    sock.send_line("ROLE,controller\n");
    while (!controller.done()) {
        const ControlMessage cm = controller.make_control();
        out.records.emplace_back(cm);
        sock.send_line(encode_message(Message{cm}));
        const std::string line = sock.recv_line();
        if (line.empty()) {
            throw transport_error("connection lost mid-session; partial transcript kept");
        }
        const Message msg = decode_or_fail(line);
        const auto* mm = std::get_if<MeasurementMessage>(&msg);
        if (!mm) throw transport_error("expected a measurement record");
        out.records.push_back(msg);
        controller.on_measurement(*mm);
    }
    sock.send_line(kEndLine);
}

Transcript run_tap_client(const Endpoint& ep) {
    LineSocket sock = connect_to(ep);
    sock.send_line("ROLE,tap\n");
    Transcript transcript;
    for (;;) {
        const std::string line = sock.recv_line();
        if (line.empty() || line == kEndLine) break;
        transcript.records.push_back(decode_or_fail(line));
    }
    return transcript;
}

}  // namespace robokey
