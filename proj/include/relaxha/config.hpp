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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relaxha/cluster.hpp"
#include "relaxha/controller.hpp"
#include "relaxha/provisioner.hpp"
#include "relaxha/telemetry.hpp"
#include "relaxha/timing.hpp"

namespace relaxha {

struct ClusterConfig {
    std::vector<PhysicalHost> hosts;
    std::vector<VirtualMachine> vms;
    std::map<std::string, BootProfile> profiles;
    ControllerParams controller;
    TelemetryParams telemetry;
    TimingParams timing;
};

/// A single problem found in a configuration document. `key` is a JSON path
/// such as `vms[2].bound_host`.
struct Diagnostic {
    std::string key;
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    enum class Kind { Parse, Validation };

    ConfigError(Kind kind, std::vector<Diagnostic> diagnostics);

    Kind kind() const noexcept { return kind_; }
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    Kind kind_;
    std::vector<Diagnostic> diagnostics_;
};

/// Parses and validates a cluster configuration document. Every violation
/// found is reported in one ConfigError.
ClusterConfig load_cluster_config(std::string_view text);

/// Same, for a document that is already parsed (scenario files embed one).
/// `prefix` is prepended to diagnostic keys.
ClusterConfig cluster_config_from_json(const nlohmann::json& doc, const std::string& prefix = "");

nlohmann::json to_json(const ClusterConfig& config);

/// Cluster state at time zero: hosts and VMs as declared, bindings wired up.
ClusterState initial_state(const ClusterConfig& config);

}  // namespace relaxha
