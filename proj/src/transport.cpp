#include "robokey/transport.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace robokey {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::size_t offset_base) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw codec_error("malformed real field", offset_base);
    }
    return v;
}

namespace {

std::uint64_t parse_u64(std::string_view s, std::size_t offset_base) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw codec_error("malformed integer field", offset_base);
    }
    return v;
}

// Split a record into comma-separated fields, tracking each field's byte
// offset for error reporting.
std::vector<std::pair<std::string_view, std::size_t>> split_fields(std::string_view rec) {
    std::vector<std::pair<std::string_view, std::size_t>> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= rec.size(); ++i) {
        if (i == rec.size() || rec[i] == ',') {
            fields.emplace_back(rec.substr(start, i - start), start);
            start = i + 1;
        }
    }
    return fields;
}

char ack_code(AckKind k) {
    switch (k) {
        case AckKind::Accept: return 'A';
        case AckKind::Reject: return 'R';
        case AckKind::None: break;
    }
    return 'N';
}

}  // namespace

std::string encode_message(const Message& msg) {
    std::string out;
    if (const auto* cm = std::get_if<ControlMessage>(&msg)) {
        out += "CTRL,";
        out += std::to_string(cm->step_index);
        out += ',';
        out += format_double(cm->u0.omega_r);
        out += ',';
        out += format_double(cm->u0.omega_l);
        out += ',';
        out += format_double(cm->u1.omega_r);
        out += ',';
        out += format_double(cm->u1.omega_l);
        out += ',';
        out += ack_code(cm->ack.kind);
        out += ',';
        if (cm->ack.kind != AckKind::None) out += std::to_string(cm->ack.seq);
    } else {
        const auto& mm = std::get<MeasurementMessage>(msg);
        out += "MEAS,";
        out += std::to_string(mm.step_index);
        for (int i = 0; i < 3; ++i) {
            out += ',';
            out += format_double(mm.y.y(i));
        }
    }
    out += '\n';
    return out;
}

std::optional<Message> decode_message(std::string_view record) {
    while (!record.empty() && (record.back() == '\n' || record.back() == '\r')) {
        record.remove_suffix(1);
    }
    if (record.find_first_not_of(" \t") == std::string_view::npos) {
        return std::nullopt;  // blank line: keepalive tolerance
    }
    const auto fields = split_fields(record);
    const auto tag = fields[0].first;
    if (tag == "CTRL") {
        if (fields.size() != 8) {
            throw codec_error("control record needs 8 fields", record.size());
        }
        ControlMessage cm;
        cm.step_index = parse_u64(fields[1].first, fields[1].second);
        cm.u0.omega_r = parse_double(fields[2].first, fields[2].second);
        cm.u0.omega_l = parse_double(fields[3].first, fields[3].second);
        cm.u1.omega_r = parse_double(fields[4].first, fields[4].second);
        cm.u1.omega_l = parse_double(fields[5].first, fields[5].second);
        const auto ack = fields[6].first;
        const auto seq = fields[7].first;
        if (ack == "N") {
            if (!seq.empty()) throw codec_error("no-ack record carries a sequence", fields[7].second);
            cm.ack = Ack{AckKind::None, 0};
        } else if (ack == "A" || ack == "R") {
            cm.ack = Ack{ack == "A" ? AckKind::Accept : AckKind::Reject,
                         parse_u64(seq, fields[7].second)};
        } else {
            throw codec_error("unknown ack kind", fields[6].second);
        }
        return Message{cm};
    }
    if (tag == "MEAS") {
        if (fields.size() != 5) {
            throw codec_error("measurement record needs 5 fields", record.size());
        }
        MeasurementMessage mm;
        mm.step_index = parse_u64(fields[1].first, fields[1].second);
        for (int i = 0; i < 3; ++i) {
            mm.y.y(i) = parse_double(fields[2 + i].first, fields[2 + i].second);
        }
        return Message{mm};
    }
    throw codec_error("unknown record tag", 0);
}

void Transcript::add_header(const std::string& key, const std::string& value) {
    header.emplace_back(key, value);
}

std::optional<std::string> Transcript::header_value(const std::string& key) const {
    for (const auto& [k, v] : header) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::string Transcript::to_text() const {
    std::string out;
    for (const auto& [k, v] : header) {
        out += "# ";
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    for (const auto& rec : records) out += encode_message(rec);
    return out;
}

Transcript Transcript::from_text(std::string_view text) {
    Transcript t;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.front() == '#') {
            std::string_view body = line.substr(1);
            if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const auto eq = body.find('=');
            if (eq != std::string_view::npos) {
                t.header.emplace_back(std::string(body.substr(0, eq)),
                                      std::string(body.substr(eq + 1)));
            }
        } else if (auto msg = decode_message(line)) {
            t.records.push_back(*msg);
        }
        pos = end + 1;
    }
    return t;
}

void Transcript::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open transcript file for writing: " + path);
    out << to_text();
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open transcript file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

}  // namespace robokey
