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

#include <string>
#include <vector>

#include "relaxha/config.hpp"

namespace relaxha::testing {

inline PhysicalHost make_host(std::string id, int cpus = 8, double threshold = 8.0) {
    PhysicalHost h;
    h.host_id = std::move(id);
    h.cpu_count = cpus;
    h.ram_mb = 16384;
    h.load_threshold = threshold;
    return h;
}

inline VirtualMachine make_vm(std::string id, std::string host, std::uint64_t mac, double load = 1.0) {
    VirtualMachine v;
    v.vm_id = std::move(id);
    v.mac = MacAddress(0x00163e000000ull + mac);
    v.bound_host = std::move(host);
    v.boot_profile = "guest";
    v.load_contribution = load;
    return v;
}

/// alfa01..alfa0N, one VM per entry of `vms` as (id, host).
inline ClusterConfig small_cluster(int hosts, const std::vector<std::pair<std::string, std::string>>& vms) {
    ClusterConfig cfg;
    for (int i = 1; i <= hosts; ++i)
        cfg.hosts.push_back(make_host("alfa0" + std::to_string(i)));
    BootProfile p;
    p.name = "guest";
    cfg.profiles.emplace(p.name, p);
    std::uint64_t mac = 1;
    for (const auto& [id, host] : vms)
        cfg.vms.push_back(make_vm(id, host, mac++));
    return cfg;
}

}  // namespace relaxha::testing
