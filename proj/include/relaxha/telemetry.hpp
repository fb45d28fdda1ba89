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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "relaxha/cluster.hpp"

namespace relaxha {

struct TelemetryParams {
    /// Staleness at which a machine is declared down.
    Seconds detection_latency_s = 70;
    /// Cadence at which responsive machines report.
    Seconds heartbeat_period_s = 10;
    /// Exponential smoothing factor for reported load; nullopt = raw load.
    std::optional<double> smoothing_alpha;
};

enum class Verdict { Up, Down };

std::string_view to_string(Verdict v);

struct MonitorEntry {
    Seconds last_heartbeat_at = 0;
    double reported_load = 0.0;
    Verdict verdict = Verdict::Up;

    friend bool operator==(const MonitorEntry&, const MonitorEntry&) = default;
};

struct MonitorSnapshot {
    Seconds taken_at = 0;
    std::map<std::string, MonitorEntry> entries;

    /// nullopt when the machine is not registered with the monitor.
    std::optional<Verdict> verdict(std::string_view machine_id) const;

    friend bool operator==(const MonitorSnapshot&, const MonitorSnapshot&) = default;
};

/// Heartbeat-staleness failure detector with a per-machine
/// view. A machine is Down once `now - last_heartbeat_at >= latency`.
///
/// Machines are registered implicitly by their first heartbeat. The engine
/// unregisters VMs that are parked without a host; their track is kept so a
/// re-registered VM resumes with its old timestamp.
class Monitor {
public:
    explicit Monitor(TelemetryParams params = {});

    /// Throws InvariantViolation if `at` precedes the machine's previous beat.
    void record_heartbeat(const std::string& machine_id, Seconds at, double load);

    void set_registered(const std::string& machine_id, bool registered);

    MonitorSnapshot snapshot(Seconds now) const;

    const TelemetryParams& params() const { return params_; }

private:
    struct Track {
        Seconds last_heartbeat_at = 0;
        double reported_load = 0.0;
        bool registered = true;
    };

    TelemetryParams params_;
    std::map<std::string, Track> tracks_;
};

/// `<CLUSTER TAKEN_AT="..">` with one `<HOST .../>` per entry, sorted by name.
std::string serialize_snapshot(const MonitorSnapshot& snapshot);

/// Inverse of serialize_snapshot. Throws std::runtime_error on malformed input.
MonitorSnapshot parse_snapshot(std::string_view text);

}  // namespace relaxha
