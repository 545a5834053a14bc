#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "robokey/parties.hpp"
#include "robokey/transport.hpp"

namespace robokey {

class transport_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0: pick an ephemeral port (server side)
};

Endpoint parse_endpoint(const std::string& text);  // "host:port"

/// Robot-side server. Accepts a controller and a tap connection (each
/// announces itself with a ROLE line), then relays: every control record is
/// applied to the plant, the resulting measurement goes back to the
/// controller, and both directions are mirrored to the tap. The tap is
/// read-only; if it ever writes, its connection is closed. Returns the
/// robot's copy of the message transcript.
///
/// `on_bound` (if set) is called with the actually bound port before
/// accepting, so callers can use port 0.
Transcript serve_robot(const Endpoint& ep, RobotParty& robot,
                       const std::function<void(std::uint16_t)>& on_bound = {});

/// Controller-side client: drives the session over the socket with the
/// same stepping as the lockstep channel. Fills `out` in place so a partial
/// transcript survives a mid-session connection loss (which throws).
void run_controller_client(const Endpoint& ep, ControllerParty& controller,
                           Transcript& out);

/// Passive tap client: collects mirrored records until the session ends.
Transcript run_tap_client(const Endpoint& ep);

}  // namespace robokey
