/*
 * Copyright 2026 The relaxha Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relaxha/telemetry.hpp"

#include <charconv>
#include <stdexcept>

namespace relaxha {

std::string_view to_string(Verdict v) { return v == Verdict::Up ? "UP" : "DOWN"; }

std::optional<Verdict> MonitorSnapshot::verdict(std::string_view machine_id) const {
    auto it = entries.find(std::string(machine_id));
    if (it == entries.end())
        return std::nullopt;
    return it->second.verdict;
}

Monitor::Monitor(TelemetryParams params) : params_(params) {
    if (params_.detection_latency_s < 1)
        throw std::invalid_argument("detection_latency_s must be >= 1");
    if (params_.heartbeat_period_s < 1)
        throw std::invalid_argument("heartbeat_period_s must be >= 1");
}

void Monitor::record_heartbeat(const std::string& machine_id, Seconds at, double load) {
    auto [it, inserted] = tracks_.try_emplace(machine_id);
    Track& t = it->second;
    if (!inserted) {
        RELAXHA_CHECK(at >= t.last_heartbeat_at,
                      "out-of-order heartbeat for " + machine_id + " at " + std::to_string(at));
        if (params_.smoothing_alpha)
            load = *params_.smoothing_alpha * load + (1.0 - *params_.smoothing_alpha) * t.reported_load;
    }
    t.last_heartbeat_at = at;
    t.reported_load = load;
}

void Monitor::set_registered(const std::string& machine_id, bool registered) {
    auto it = tracks_.find(machine_id);
    if (it != tracks_.end())
        it->second.registered = registered;
}

MonitorSnapshot Monitor::snapshot(Seconds now) const {
    MonitorSnapshot snap;
    snap.taken_at = now;
    for (const auto& [id, t] : tracks_) {
        if (!t.registered)
            continue;
        RELAXHA_CHECK(now >= t.last_heartbeat_at, "snapshot predates heartbeat of " + id);
        const bool stale = now - t.last_heartbeat_at >= params_.detection_latency_s;
        snap.entries.emplace(id, MonitorEntry{t.last_heartbeat_at, t.reported_load,
                                              stale ? Verdict::Down : Verdict::Up});
    }
    return snap;
}

namespace {

void append_escaped(std::string& out, std::string_view s) {
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
}

std::string unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        static constexpr std::pair<std::string_view, char> kEntities[] = {
            {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}};
        bool matched = false;
        for (auto [ent, ch] : kEntities) {
            if (s.substr(i, ent.size()) == ent) {
                out += ch;
                i += ent.size() - 1;
                matched = true;
                break;
            }
        }
        if (!matched)
            throw std::runtime_error("bad entity in snapshot text");
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t' || s_[pos_] == '\r'))
            ++pos_;
    }
    bool consume(std::string_view lit) {
        skip_ws();
        if (s_.substr(pos_, lit.size()) != lit)
            return false;
        pos_ += lit.size();
        return true;
    }
    void expect(std::string_view lit) {
        if (!consume(lit))
            fail("expected '" + std::string(lit) + "'");
    }
    std::string attribute(std::string_view name) {
        skip_ws();
        expect(name);
        expect("=\"");
        const auto close = s_.find('"', pos_);
        if (close == std::string_view::npos)
            fail("unterminated attribute");
        std::string value = unescape(s_.substr(pos_, close - pos_));
        pos_ = close + 1;
        return value;
    }
    bool at_end() {
        skip_ws();
        return pos_ == s_.size();
    }
    [[noreturn]] void fail(const std::string& why) const {
        throw std::runtime_error("snapshot parse error at offset " + std::to_string(pos_) + ": " + why);
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

template <typename T>
T parse_number(const Reader& r, const std::string& text) {
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size())
        r.fail("bad number '" + text + "'");
    return value;
}

}  // namespace

std::string serialize_snapshot(const MonitorSnapshot& snapshot) {
    std::string out = "<CLUSTER TAKEN_AT=\"" + std::to_string(snapshot.taken_at) + "\">\n";
    for (const auto& [id, e] : snapshot.entries) {
        out += "  <HOST NAME=\"";
        append_escaped(out, id);
        out += "\" LAST_HEARTBEAT=\"" + std::to_string(e.last_heartbeat_at);
        out += "\" LOAD=\"" + format_double(e.reported_load);
        out += "\" VERDICT=\"";
        out += to_string(e.verdict);
        out += "\"/>\n";
    }
    out += "</CLUSTER>\n";
    return out;
}

MonitorSnapshot parse_snapshot(std::string_view text) {
    Reader r(text);
    MonitorSnapshot snap;
    r.expect("<CLUSTER");
    snap.taken_at = parse_number<Seconds>(r, r.attribute("TAKEN_AT"));
    r.expect(">");
    while (r.consume("<HOST")) {
        std::string name = r.attribute("NAME");
        MonitorEntry e;
        e.last_heartbeat_at = parse_number<Seconds>(r, r.attribute("LAST_HEARTBEAT"));
        e.reported_load = parse_number<double>(r, r.attribute("LOAD"));
        const std::string verdict = r.attribute("VERDICT");
        if (verdict == "UP")
            e.verdict = Verdict::Up;
        else if (verdict == "DOWN")
            e.verdict = Verdict::Down;
        else
            r.fail("bad verdict '" + verdict + "'");
        r.expect("/>");
        if (!snap.entries.emplace(std::move(name), e).second)
            r.fail("duplicate HOST element");
    }
    r.expect("</CLUSTER>");
    if (!r.at_end())
        r.fail("trailing content");
    return snap;
}

}  // namespace relaxha
