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
#include <variant>
#include <vector>

#include "relaxha/cluster.hpp"
#include "relaxha/telemetry.hpp"

namespace relaxha {

struct ControllerParams {
    Seconds scan_period_s = 60;
    /// Wait after a Reboot before escalating to Restart.
    Seconds t1_s = 180;
    /// Wait after a Restart before escalating to Reinstall.
    Seconds t2_s = 180;
    bool reboot_step_enabled = true;
    /// Wait after a Reinstall before the cycle starts over at Restart. Must
    /// cover a full install, otherwise the controller interrupts it.
    Seconds reinstall_timeout_s = 600;
    /// Restart/Reinstall cycles per episode before giving up on a VM.
    int max_cycles = 3;
    /// Used for hosts that declare no explicit load threshold.
    double per_core_factor = 1.0;
};

/// One message per violated constraint; empty when the params are usable.
std::vector<std::string> validate(const ControllerParams& params);

enum class Intervention { Restart, Reinstall };

namespace phase {
struct Healthy {
    friend bool operator==(const Healthy&, const Healthy&) = default;
};
struct RebootIssued {
    Seconds deadline;
    friend bool operator==(const RebootIssued&, const RebootIssued&) = default;
};
struct RestartIssued {
    Seconds deadline;
    friend bool operator==(const RestartIssued&, const RestartIssued&) = default;
};
struct ReinstallIssued {
    Seconds deadline;
    friend bool operator==(const ReinstallIssued&, const ReinstallIssued&) = default;
};
/// Nothing could host the VM; `pending` is retried on every scan.
struct AwaitingCapacity {
    Intervention pending;
    friend bool operator==(const AwaitingCapacity&, const AwaitingCapacity&) = default;
};
/// Escalation exhausted; the VM is left alone until it is seen up again.
struct RequiresHuman {
    friend bool operator==(const RequiresHuman&, const RequiresHuman&) = default;
};
}  // namespace phase

using Phase = std::variant<phase::Healthy, phase::RebootIssued, phase::RestartIssued,
                           phase::ReinstallIssued, phase::AwaitingCapacity, phase::RequiresHuman>;

std::string to_string(const Phase& p);

/// Per-VM controller memory.
struct EscalationRecord {
    std::string vm_id;
    Phase phase = phase::Healthy{};
    Seconds last_seen_up_at = 0;
    std::optional<Seconds> episode_started_at;
    /// Completed Restart/Reinstall cycles in the current episode.
    int cycles = 0;

    friend bool operator==(const EscalationRecord&, const EscalationRecord&) = default;
};

enum class ActionKind { Reboot, Restart, Reinstall, Defer, NoOp };

std::string_view to_string(ActionKind k);

struct Action {
    ActionKind kind = ActionKind::NoOp;
    std::string vm_id;
    std::string target_host;  // Restart and Reinstall only

    static Action reboot(std::string vm) { return {ActionKind::Reboot, std::move(vm), {}}; }
    static Action restart(std::string vm, std::string host) {
        return {ActionKind::Restart, std::move(vm), std::move(host)};
    }
    static Action reinstall(std::string vm, std::string host) {
        return {ActionKind::Reinstall, std::move(vm), std::move(host)};
    }
    static Action defer(std::string vm) { return {ActionKind::Defer, std::move(vm), {}}; }

    friend bool operator==(const Action&, const Action&) = default;
};

/// "reboot gridce", "restart gridce alfa04", ...
std::string to_string(const Action& a);

/// Placement inputs for one candidate host.
struct HostView {
    std::string host_id;
    PowerState power_state = PowerState::On;
    bool monitored_up = true;
    double load = 0.0;
    int vm_count = 0;
    double load_threshold = 1.0;

    friend bool operator==(const HostView&, const HostView&) = default;
};

using PlacementView = std::vector<HostView>;

/// Builds the view the controller places against. A host's load counts its
/// Running VMs, injected load, and the contributions of VMs already booting
/// or installing there (capacity they will claim once up).
PlacementView make_placement_view(const ClusterState& state, const MonitorSnapshot& snapshot);

/// Least-loaded eligible host, ties broken by hosted VM count then host id.
/// Eligible: powered on, seen up by the monitor, and still strictly under
/// its threshold after adding the VM's contribution.
std::optional<std::string> choose_host(const PlacementView& view, const VirtualMachine& vm);

/// Restart plan for the VMs of a crashed physical host, in vm_id order.
/// Each placement is charged to the view before the next VM is placed.
std::vector<Action> plan_host_failover(const std::string& failed_host,
                                       const std::vector<VirtualMachine>& hosted_vms,
                                       const PlacementView& view);

struct TickResult {
    std::map<std::string, EscalationRecord> records;
    std::vector<Action> actions;
};

/// One controller scan. Pure: the same inputs always produce the same
/// records and actions. `vms` supplies per-VM policy (reinstall opt-out,
/// load contribution) and current binding for placement bookkeeping.
///
/// Per VM, in vm_id order:
///  - seen Up: record resets to Healthy;
///  - Down while Healthy: Reboot (or Restart when the reboot step is off);
///  - Down past the Reboot deadline: Restart on choose_host;
///  - Down past the Restart deadline: Reinstall, or another Restart for VMs
///    that opted out of reinstall;
///  - Down past the Reinstall deadline: the cycle starts over at Restart.
/// After max_cycles cycles the VM becomes RequiresHuman. A placement that
/// finds no host emits Defer and parks the VM in AwaitingCapacity until a
/// later scan finds room. Escalation continues within the same scan when a
/// new deadline is already due (zero-length waits).
TickResult tick(const std::map<std::string, EscalationRecord>& records,
                const MonitorSnapshot& snapshot, const PlacementView& view, Seconds now,
                const ControllerParams& params, const std::map<std::string, VirtualMachine>& vms);

}  // namespace relaxha
