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

#include "relaxha/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace relaxha {

namespace {

Seconds floor_to(Seconds v, Seconds w) {
    Seconds q = v / w;
    if (v % w != 0 && v < 0)
        --q;
    return q * w;
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

Seconds to_seconds(const std::string& s) {
    Seconds v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw std::runtime_error("bad integer '" + s + "'");
    return v;
}

std::optional<Seconds> optional_seconds(const std::string& s) {
    if (s.empty())
        return std::nullopt;
    return to_seconds(s);
}

ActionKind action_kind(const std::string& s) {
    for (auto k : {ActionKind::Reboot, ActionKind::Restart, ActionKind::Reinstall, ActionKind::Defer,
                   ActionKind::NoOp})
        if (to_string(k) == s)
            return k;
    throw std::runtime_error("unknown action kind '" + s + "'");
}

FailureKind failure_kind(const std::string& s) {
    if (auto k = failure_kind_from_string(s))
        return *k;
    throw std::runtime_error("unknown failure kind '" + s + "'");
}

}  // namespace

Summary summarize(std::span<const Episode> episodes, Seconds bin_width_s) {
    if (bin_width_s < 1)
        throw std::invalid_argument("bin width must be >= 1");
    std::map<std::string, std::vector<Seconds>> samples;
    std::map<std::string, int> unrecovered;
    for (const Episode& ep : episodes) {
        const std::string kind(to_string(ep.kind));
        samples[kind];
        if (auto r = ep.recovery_time())
            samples[kind].push_back(*r);
        else
            ++unrecovered[kind];
    }

    Summary out;
    for (const auto& [kind, xs] : samples) {
        KindSummary row;
        row.kind = kind;
        row.count = static_cast<int>(xs.size());
        row.unrecovered = unrecovered[kind];
        if (!xs.empty()) {
            row.min_s = *std::min_element(xs.begin(), xs.end());
            row.max_s = *std::max_element(xs.begin(), xs.end());
            double sum = 0.0;
            for (Seconds x : xs)
                sum += static_cast<double>(x);
            row.mean_s = sum / static_cast<double>(xs.size());
            double sq = 0.0;
            for (Seconds x : xs)
                sq += (static_cast<double>(x) - row.mean_s) * (static_cast<double>(x) - row.mean_s);
            row.stddev_s = std::sqrt(sq / static_cast<double>(xs.size()));

            const Seconds first = floor_to(row.min_s, bin_width_s);
            const Seconds last = floor_to(row.max_s, bin_width_s);
            for (Seconds b = first; b <= last; b += bin_width_s)
                row.histogram.push_back({b, 0});
            for (Seconds x : xs)
                row.histogram[static_cast<std::size_t>((floor_to(x, bin_width_s) - first) / bin_width_s)].count++;
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::string report_csv(const Summary& summary) {
    std::string out = "kind,count,mean_s,stddev_s,min_s,max_s\n";
    for (const auto& row : summary) {
        out += row.kind + "," + std::to_string(row.count) + ",";
        if (row.count > 0)
            out += fixed3(row.mean_s) + "," + fixed3(row.stddev_s) + "," + std::to_string(row.min_s) + "," +
                   std::to_string(row.max_s);
        else
            out += ",,,";
        out += "\n";
    }
    return out;
}

std::string histogram_csv(const KindSummary& row) {
    std::string out = "bin_start_s,count\n";
    for (const auto& bin : row.histogram)
        out += std::to_string(bin.bin_start_s) + "," + std::to_string(bin.count) + "\n";
    return out;
}

std::string episodes_csv(std::span<const Episode> episodes) {
    std::string out = "id,vm_id,kind,failure_at,detected_at,recovered_at,recovered_on,actions\n";
    auto opt = [](const std::optional<Seconds>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const Episode& ep : episodes) {
        out += std::to_string(ep.id) + "," + ep.vm_id + "," + std::string(to_string(ep.kind)) + "," +
               std::to_string(ep.failure_at) + "," + opt(ep.detected_at) + "," + opt(ep.recovered_at) + "," +
               ep.recovered_on.value_or("") + ",";
        for (std::size_t i = 0; i < ep.actions.size(); ++i) {
            const auto& ta = ep.actions[i];
            if (i)
                out += ";";
            out += std::to_string(ta.at) + ":" + std::string(to_string(ta.action.kind));
            if (!ta.action.target_host.empty())
                out += ":" + ta.action.target_host;
        }
        out += "\n";
    }
    return out;
}

std::vector<Episode> parse_episodes_csv(std::string_view text) {
    std::vector<Episode> out;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,vm_id,kind,", 0) != 0)
        throw std::runtime_error("episodes.csv: missing header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = split(line, ',');
        if (f.size() != 8)
            throw std::runtime_error("episodes.csv: expected 8 fields in '" + line + "'");
        Episode ep;
        ep.id = static_cast<int>(to_seconds(f[0]));
        ep.vm_id = f[1];
        ep.kind = failure_kind(f[2]);
        ep.failure_at = to_seconds(f[3]);
        ep.detected_at = optional_seconds(f[4]);
        ep.recovered_at = optional_seconds(f[5]);
        if (!f[6].empty())
            ep.recovered_on = f[6];
        if (!f[7].empty()) {
            for (const auto& item : split(f[7], ';')) {
                const auto parts = split(item, ':');
                if (parts.size() < 2 || parts.size() > 3)
                    throw std::runtime_error("episodes.csv: bad action '" + item + "'");
                TimedAction ta;
                ta.at = to_seconds(parts[0]);
                ta.action.kind = action_kind(parts[1]);
                ta.action.vm_id = ep.vm_id;
                if (parts.size() == 3)
                    ta.action.target_host = parts[2];
                ep.actions.push_back(std::move(ta));
            }
        }
        out.push_back(std::move(ep));
    }
    return out;
}

std::vector<Episode> parse_trace(std::string_view text) {
    std::vector<Episode> out;
    std::map<std::string, std::size_t> open;       // vm -> index in out
    std::map<std::string, std::size_t> by_trace_id;  // trace episode id -> index
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream fields(line);
        std::string t_str, kind;
        if (!(fields >> t_str >> kind))
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": malformed");
        const Seconds t = to_seconds(t_str);
        std::vector<std::string> args;
        for (std::string a; fields >> a;)
            args.push_back(a);
        auto need = [&](std::size_t n) {
            if (args.size() < n)
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": too few fields");
        };

        if (kind == "replication") {
            open.clear();
            by_trace_id.clear();
        } else if (kind == "episode_open") {
            need(3);
            Episode ep;
            ep.id = static_cast<int>(out.size());
            ep.vm_id = args[1];
            ep.kind = failure_kind(args[2]);
            ep.failure_at = t;
            by_trace_id[args[0]] = out.size();
            open[ep.vm_id] = out.size();
            out.push_back(std::move(ep));
        } else if (kind == "detected") {
            need(1);
            auto it = by_trace_id.find(args[0]);
            if (it == by_trace_id.end())
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": unknown episode");
            out[it->second].detected_at = t;
        } else if (kind == "action") {
            need(2);
            auto it = open.find(args[1]);
            if (it == open.end())
                continue;  // VM acted on outside any injected episode
            TimedAction ta{t, Action{action_kind(args[0]), args[1], args.size() > 2 ? args[2] : ""}};
            out[it->second].actions.push_back(std::move(ta));
        } else if (kind == "recovered") {
            need(3);
            auto it = by_trace_id.find(args[0]);
            if (it == by_trace_id.end())
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": unknown episode");
            Episode& ep = out[it->second];
            ep.recovered_at = to_seconds(args[2]);
            if (args.size() > 3)
                ep.recovered_on = args[3];
            open.erase(ep.vm_id);
        }
    }
    return out;
}

std::string summary_text(const Summary& summary, std::span<const Episode> episodes) {
    std::ostringstream out;
    out << "episodes: " << episodes.size() << "\n";
    for (const auto& row : summary) {
        out << row.kind << ": " << row.count << " recovered, " << row.unrecovered << " unrecovered";
        if (row.count > 0)
            out << "; recovery " << fixed3(row.mean_s) << " s +/- " << fixed3(row.stddev_s) << " s (min "
                << row.min_s << ", max " << row.max_s << ")";
        out << "\n";
    }
    double detect_sum = 0.0;
    int detected = 0;
    for (const auto& ep : episodes)
        if (ep.detected_at) {
            detect_sum += static_cast<double>(*ep.detected_at - ep.failure_at);
            ++detected;
        }
    if (detected > 0)
        out << "mean detection delay: " << fixed3(detect_sum / detected) << " s over " << detected
            << " episodes\n";
    std::size_t listed = 0;
    for (const auto& ep : episodes) {
        if (++listed > 50) {
            out << "  ...\n";
            break;
        }
        out << "  #" << ep.id << " " << ep.vm_id << " " << to_string(ep.kind) << " at " << ep.failure_at;
        if (ep.recovered_at)
            out << ", recovered at " << *ep.recovered_at << " on " << ep.recovered_on.value_or("?") << " after "
                << *ep.recovery_time() << " s";
        else
            out << ", not recovered";
        out << "\n";
    }
    return out.str();
}

}  // namespace relaxha
