#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "robokey/models.hpp"
#include "robokey/protocol.hpp"

namespace robokey {

class codec_error : public std::runtime_error {
public:
    codec_error(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Controller-to-robot record: the candidate input pair for one step plus
/// the piggybacked codeword verdict.
struct ControlMessage {
    std::uint64_t step_index = 0;
    DiffDriveInput u0;
    DiffDriveInput u1;
    Ack ack;

    PerturbedInputPair pair() const { return {step_index, u0, u1, ack}; }
};

/// Robot-to-controller record: the measurement taken after applying the
/// step's input.
struct MeasurementMessage {
    std::uint64_t step_index = 0;
    Measurement y;
};

using Message = std::variant<ControlMessage, MeasurementMessage>;

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s, std::size_t offset_base);

/// One newline-terminated ASCII record. Reals use the shortest round-trip
/// representation, so encode/decode is bit-exact.
std::string encode_message(const Message& msg);

/// Inverse of encode_message. Returns nullopt for blank lines (keepalive
/// tolerance); throws codec_error with a byte offset on malformed input.
std::optional<Message> decode_message(std::string_view record);

/// Ordered public record of a session: header key=value pairs followed by
/// every message in both directions. Replaying a transcript through any
/// party reproduces its outputs bit for bit.
struct Transcript {
    std::vector<std::pair<std::string, std::string>> header;
    std::vector<Message> records;

    void add_header(const std::string& key, const std::string& value);
    std::optional<std::string> header_value(const std::string& key) const;

    /// Serialize: "# key=value" lines, then one record per line.
    std::string to_text() const;
    static Transcript from_text(std::string_view text);

    void save(const std::string& path) const;
    static Transcript load(const std::string& path);
};

/// Deterministic in-process delivery: per step k the control message goes
/// to the robot (and the tap), the plant advances, and the resulting
/// measurement returns to the controller (and the tap). `Controller` must
/// provide make_control() -> ControlMessage, on_measurement(const
/// MeasurementMessage&) and done(); `Robot` must provide on_control(const
/// ControlMessage&) -> MeasurementMessage.
template <typename Controller, typename Robot>
Transcript run_lockstep(Controller& controller, Robot& robot,
                        const std::function<void(const Message&)>& tap = {}) {
    Transcript transcript;
    while (!controller.done()) {
        const ControlMessage cm = controller.make_control();
        transcript.records.emplace_back(cm);
        if (tap) tap(transcript.records.back());
        const MeasurementMessage mm = robot.on_control(cm);
        transcript.records.emplace_back(mm);
        if (tap) tap(transcript.records.back());
        controller.on_measurement(mm);
    }
    return transcript;
}

}  // namespace robokey
