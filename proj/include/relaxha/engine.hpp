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

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relaxha/config.hpp"
#include "relaxha/controller.hpp"
#include "relaxha/stats.hpp"
#include "relaxha/telemetry.hpp"

namespace relaxha {

enum class FailureKind {
    NonDestructiveCrash,  // guest hangs; a reboot brings it back
    DestructiveCrash,     // boot partition gone; only a reinstall helps
    PhysicalHostFailure,  // host powers off for good
    PowerGlitch,          // hosts power off, then boot again on their own
    LoadSpike,            // extra load on one host for a while
};

/// Stable snake_case name used in traces and reports.
std::string_view to_string(FailureKind k);
std::optional<FailureKind> failure_kind_from_string(std::string_view name);

struct FailureInjection {
    Seconds at = 0;
    FailureKind kind = FailureKind::NonDestructiveCrash;
    /// A VM id for crashes; host ids otherwise (several for PowerGlitch).
    std::vector<std::string> targets;
    double extra_load = 0.0;  // LoadSpike only
    Seconds duration_s = 0;   // LoadSpike only

    static FailureInjection nondestructive_crash(Seconds at, std::string vm);
    static FailureInjection destructive_crash(Seconds at, std::string vm);
    static FailureInjection host_failure(Seconds at, std::string host);
    static FailureInjection power_glitch(Seconds at, std::vector<std::string> hosts);
    static FailureInjection load_spike(Seconds at, std::string host, double extra, Seconds duration);
};

struct TimedAction {
    Seconds at = 0;
    Action action;

    friend bool operator==(const TimedAction&, const TimedAction&) = default;
};

/// One VM's failure and everything the controller did until it came back.
struct Episode {
    int id = 0;
    std::string vm_id;
    FailureKind kind = FailureKind::NonDestructiveCrash;
    Seconds failure_at = 0;
    std::optional<Seconds> detected_at;
    std::vector<TimedAction> actions;
    std::optional<Seconds> recovered_at;
    /// Placement of the final Restart/Reinstall, if any.
    std::optional<std::string> recovered_on;

    std::optional<Seconds> recovery_time() const {
        if (!recovered_at)
            return std::nullopt;
        return *recovered_at - failure_at;
    }

    friend bool operator==(const Episode&, const Episode&) = default;
};

struct SimReport {
    std::vector<Episode> episodes;
    Summary aggregates;  // binned at kDefaultBinWidth

    static constexpr Seconds kDefaultBinWidth = 10;

    friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Everything a scan saw and decided, handed to observers before the
/// actions are applied.
struct ScanView {
    Seconds now;
    const ClusterState& state;
    const MonitorSnapshot& snapshot;
    const PlacementView& placement;
    const std::map<std::string, EscalationRecord>& records_before;
    const std::map<std::string, EscalationRecord>& records_after;
    const std::vector<Action>& actions;
};

struct SimOptions {
    /// Line-oriented event trace, `<t> <event-kind> <args...>`.
    std::ostream* trace = nullptr;
    /// Receives the monitor snapshot of every controller scan.
    std::function<void(const MonitorSnapshot&)> monitor_log;
    std::function<void(const ScanView&)> on_scan;
    /// Called after every applied event.
    std::function<void(Seconds, const ClusterState&)> on_event;
    /// Verify ClusterState invariants after every event.
    bool check_invariants = true;
};

/// Runs one scenario to `horizon_s` with the seed in config.timing.rng_seed.
/// Throws UnknownIdError for injections naming unknown hosts or VMs and
/// std::invalid_argument for injections outside [0, horizon_s].
SimReport run_scenario(const ClusterConfig& config, std::vector<FailureInjection> injections,
                       Seconds horizon_s, const SimOptions& options = {});

}  // namespace relaxha
