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

#include "relaxha/cluster.hpp"

#include <charconv>
#include <cstdio>

namespace relaxha {

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
    if (text.size() != 17)
        return std::nullopt;
    std::uint64_t bits = 0;
    for (std::size_t octet = 0; octet < 6; ++octet) {
        const std::size_t pos = octet * 3;
        if (octet > 0 && text[pos - 1] != ':')
            return std::nullopt;
        unsigned value = 0;
        const char* first = text.data() + pos;
        auto [end, ec] = std::from_chars(first, first + 2, value, 16);
        if (ec != std::errc{} || end != first + 2)
            return std::nullopt;
        bits = (bits << 8) | value;
    }
    return MacAddress(bits);
}

std::string MacAddress::str() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x",
                  unsigned(bits_ >> 40) & 0xFF, unsigned(bits_ >> 32) & 0xFF,
                  unsigned(bits_ >> 24) & 0xFF, unsigned(bits_ >> 16) & 0xFF,
                  unsigned(bits_ >> 8) & 0xFF, unsigned(bits_) & 0xFF);
    return buf;
}

std::string_view to_string(PowerState s) {
    return s == PowerState::On ? "On" : "Off";
}

std::string_view to_string(Lifecycle s) {
    switch (s) {
    case Lifecycle::Running: return "Running";
    case Lifecycle::Unresponsive: return "Unresponsive";
    case Lifecycle::Halted: return "Halted";
    case Lifecycle::Booting: return "Booting";
    case Lifecycle::Installing: return "Installing";
    case Lifecycle::WaitingForCapacity: return "WaitingForCapacity";
    }
    return "?";
}

namespace {

template <typename Map>
auto& lookup(Map& map, std::string_view id) {
    auto it = map.find(std::string(id));
    if (it == map.end())
        throw UnknownIdError(std::string(id));
    return it->second;
}

}  // namespace

const PhysicalHost& ClusterState::host(std::string_view id) const { return lookup(hosts, id); }
PhysicalHost& ClusterState::host(std::string_view id) { return lookup(hosts, id); }
const VirtualMachine& ClusterState::vm(std::string_view id) const { return lookup(vms, id); }
VirtualMachine& ClusterState::vm(std::string_view id) { return lookup(vms, id); }

void ClusterState::bind(std::string_view vm_id, std::optional<std::string> host_id) {
    VirtualMachine& v = vm(vm_id);
    if (host_id)
        (void)host(*host_id);  // validate before mutating anything
    if (v.bound_host)
        host(*v.bound_host).hosted_vms.erase(v.vm_id);
    v.bound_host = std::move(host_id);
    if (v.bound_host)
        host(*v.bound_host).hosted_vms.insert(v.vm_id);
}

void ClusterState::check_invariants() const {
    std::set<std::uint64_t> macs;
    for (const auto& [id, v] : vms) {
        RELAXHA_CHECK(id == v.vm_id, "vm key mismatch for " + id);
        RELAXHA_CHECK(macs.insert(v.mac.bits()).second, "duplicate mac " + v.mac.str());
        switch (v.lifecycle) {
        case Lifecycle::Running:
        case Lifecycle::Unresponsive:
        case Lifecycle::Booting:
        case Lifecycle::Installing:
            RELAXHA_CHECK(v.bound_host.has_value(),
                          id + " is " + std::string(to_string(v.lifecycle)) + " but unbound");
            break;
        case Lifecycle::WaitingForCapacity:
            RELAXHA_CHECK(!v.bound_host.has_value(), id + " waits for capacity but is bound");
            break;
        case Lifecycle::Halted:
            break;
        }
        if (v.bound_host) {
            auto it = hosts.find(*v.bound_host);
            RELAXHA_CHECK(it != hosts.end(), id + " bound to unknown host " + *v.bound_host);
            RELAXHA_CHECK(it->second.hosted_vms.count(id) == 1,
                          *v.bound_host + " does not list " + id);
            const bool active = v.lifecycle == Lifecycle::Running || v.lifecycle == Lifecycle::Booting ||
                                v.lifecycle == Lifecycle::Installing;
            RELAXHA_CHECK(!active || it->second.power_state == PowerState::On,
                          id + " is " + std::string(to_string(v.lifecycle)) + " on powered-off " + it->first);
        }
    }
    std::set<std::string> seen;
    for (const auto& [id, h] : hosts) {
        RELAXHA_CHECK(id == h.host_id, "host key mismatch for " + id);
        RELAXHA_CHECK(h.load_threshold > 0, id + " has non-positive threshold");
        for (const auto& vm_id : h.hosted_vms) {
            auto it = vms.find(vm_id);
            RELAXHA_CHECK(it != vms.end(), id + " lists unknown vm " + vm_id);
            RELAXHA_CHECK(it->second.bound_host == id, vm_id + " binding does not point at " + id);
            RELAXHA_CHECK(seen.insert(vm_id).second, vm_id + " hosted twice");
        }
    }
}

double host_load(const ClusterState& state, std::string_view host_id) {
    const PhysicalHost& h = state.host(host_id);
    if (h.power_state == PowerState::Off)
        return 0.0;
    double load = 0.0;
    for (const auto& vm_id : h.hosted_vms) {
        const VirtualMachine& v = state.vm(vm_id);
        if (v.lifecycle == Lifecycle::Running)
            load += v.load_contribution;
    }
    if (auto it = state.extra_load.find(h.host_id); it != state.extra_load.end())
        load += it->second;
    return load;
}

double default_threshold(int cpu_count, double per_core_factor) {
    if (cpu_count < 1 || !(per_core_factor > 0))
        throw std::invalid_argument("default_threshold: cpu_count >= 1 and per_core_factor > 0 required");
    return cpu_count * per_core_factor;
}

}  // namespace relaxha
