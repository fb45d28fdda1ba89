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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relaxha {

/// Simulated time in whole seconds since scenario start.
using Seconds = std::int64_t;

/// Thrown when an internal consistency rule is broken. Always a bug in the
/// caller (usually the simulation engine), never a user input problem.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Thrown for lookups of hosts or VMs that are not part of the cluster.
class UnknownIdError : public std::out_of_range {
public:
    explicit UnknownIdError(const std::string& id)
        : std::out_of_range("unknown id: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

#define RELAXHA_CHECK(cond, msg)                                              \
    do {                                                                      \
        if (!(cond))                                                          \
            throw ::relaxha::InvariantViolation(std::string(__func__) + ": " + \
                                                (msg));                       \
    } while (0)

/// 48-bit hardware address. Rendered as lower-case colon-separated hex.
class MacAddress {
public:
    constexpr MacAddress() = default;
    constexpr explicit MacAddress(std::uint64_t bits) : bits_(bits & kMask) {}

    /// Accepts "aa:bb:cc:dd:ee:ff" (either case). Returns nullopt otherwise.
    static std::optional<MacAddress> parse(std::string_view text);

    std::string str() const;
    constexpr std::uint64_t bits() const { return bits_; }

    friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;

private:
    static constexpr std::uint64_t kMask = 0xFFFF'FFFF'FFFFull;
    std::uint64_t bits_ = 0;
};

enum class PowerState { On, Off };

enum class Lifecycle {
    Running,
    Unresponsive,
    Halted,
    Booting,
    Installing,
    WaitingForCapacity,
};

std::string_view to_string(PowerState s);
std::string_view to_string(Lifecycle s);

struct PhysicalHost {
    std::string host_id;
    int cpu_count = 1;
    int ram_mb = 1;
    double load_threshold = 1.0;
    PowerState power_state = PowerState::On;
    std::set<std::string> hosted_vms;
};

struct VirtualMachine {
    std::string vm_id;
    MacAddress mac;
    std::optional<std::string> bound_host;
    Lifecycle lifecycle = Lifecycle::Running;
    bool reinstall_allowed = true;
    std::string boot_profile;
    double load_contribution = 1.0;
};

/// The world the controller acts on. Mutated only by the simulation engine.
struct ClusterState {
    std::map<std::string, PhysicalHost> hosts;
    std::map<std::string, VirtualMachine> vms;
    /// Scenario-injected load per host (load spikes), on top of VM load.
    std::map<std::string, double> extra_load;
    Seconds clock = 0;

    const PhysicalHost& host(std::string_view id) const;
    PhysicalHost& host(std::string_view id);
    const VirtualMachine& vm(std::string_view id) const;
    VirtualMachine& vm(std::string_view id);

    /// Moves a VM onto `host_id`, or unbinds it when `host_id` is empty.
    void bind(std::string_view vm_id, std::optional<std::string> host_id);

    /// Throws InvariantViolation on any broken binding or lifecycle rule.
    void check_invariants() const;
};

/// Sum of load_contribution over Running VMs bound to the host plus injected
/// extra load. Zero for a powered-off host.
double host_load(const ClusterState& state, std::string_view host_id);

/// Threshold used when a host declares none.
double default_threshold(int cpu_count, double per_core_factor = 1.0);

}  // namespace relaxha
