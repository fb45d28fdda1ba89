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

#include "relaxha/config.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace relaxha {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
    std::string msg = "invalid cluster configuration";
    for (const auto& d : diags)
        msg += "\n  " + d.key + ": " + d.message;
    return msg;
}

/// Reads one JSON object, recording type errors and unknown keys instead of
/// throwing so all problems surface together.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path, std::vector<Diagnostic>& diags)
        : obj_(obj), path_(std::move(path)), diags_(diags) {
        if (!obj_.is_object())
            error(path_, "expected an object");
    }

    ~ObjectReader() = default;

    bool ok() const { return obj_.is_object(); }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!ok())
            return nullptr;
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <typename T>
    bool integer(const std::string& key, T& out, bool required = false) {
        const json* v = get(key);
        if (!v)
            return missing(key, required);
        if (!v->is_number_integer()) {
            error(at(key), "expected an integer");
            return false;
        }
        out = v->get<T>();
        return true;
    }

    bool number(const std::string& key, double& out, bool required = false) {
        const json* v = get(key);
        if (!v)
            return missing(key, required);
        if (!v->is_number()) {
            error(at(key), "expected a number");
            return false;
        }
        out = v->get<double>();
        return true;
    }

    bool boolean(const std::string& key, bool& out, bool required = false) {
        const json* v = get(key);
        if (!v)
            return missing(key, required);
        if (!v->is_boolean()) {
            error(at(key), "expected true or false");
            return false;
        }
        out = v->get<bool>();
        return true;
    }

    bool string(const std::string& key, std::string& out, bool required = false) {
        const json* v = get(key);
        if (!v)
            return missing(key, required);
        if (!v->is_string()) {
            error(at(key), "expected a string");
            return false;
        }
        out = v->get<std::string>();
        return true;
    }

    /// Reports every key of the object that no accessor asked for.
    void reject_unknown() {
        if (!ok())
            return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key()))
                error(at(it.key()), "unknown key");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void error(std::string key, std::string message) {
        diags_.push_back({std::move(key), std::move(message)});
    }

private:
    bool missing(const std::string& key, bool required) {
        if (required)
            error(at(key), "required key missing");
        return false;
    }

    const json& obj_;
    std::string path_;
    std::vector<Diagnostic>& diags_;
    std::set<std::string> seen_;
};

// Ids appear unquoted in traces and CSV reports.
bool valid_id(const std::string& id) {
    if (id.empty())
        return false;
    for (unsigned char c : id)
        if (std::isspace(c) || c == ',' || c == ';' || c == ':' || c == '"' || !std::isprint(c))
            return false;
    return true;
}

void read_controller(const json& j, const std::string& path, ControllerParams& p,
                     std::vector<Diagnostic>& diags) {
    ObjectReader r(j, path, diags);
    r.integer("scan_period_s", p.scan_period_s);
    r.integer("t1_s", p.t1_s);
    r.integer("t2_s", p.t2_s);
    r.boolean("reboot_step_enabled", p.reboot_step_enabled);
    r.integer("reinstall_timeout_s", p.reinstall_timeout_s);
    r.integer("max_cycles", p.max_cycles);
    r.number("per_core_factor", p.per_core_factor);
    r.reject_unknown();
}

void read_telemetry(const json& j, const std::string& path, TelemetryParams& p,
                    std::vector<Diagnostic>& diags) {
    ObjectReader r(j, path, diags);
    r.integer("detection_latency_s", p.detection_latency_s);
    r.integer("heartbeat_period_s", p.heartbeat_period_s);
    if (const json* s = r.get("smoothing")) {
        const std::string key = r.at("smoothing");
        if (s->is_string() && s->get<std::string>() == "none") {
            p.smoothing_alpha.reset();
        } else if (s->is_object() && s->size() == 1 && s->contains("exponential") &&
                   (*s)["exponential"].is_number()) {
            const double alpha = (*s)["exponential"].get<double>();
            if (!(alpha > 0 && alpha <= 1))
                r.error(key + ".exponential", "alpha must be in (0, 1]");
            p.smoothing_alpha = alpha;
        } else {
            r.error(key, "expected \"none\" or {\"exponential\": alpha}");
        }
    }
    r.reject_unknown();
}

void read_timing(const json& j, const std::string& path, TimingParams& p,
                 std::vector<Diagnostic>& diags) {
    ObjectReader r(j, path, diags);
    r.integer("boot_jitter_s", p.boot_jitter_s);
    r.integer("reinstall_jitter_s", p.reinstall_jitter_s);
    r.integer("controller_phase_s", p.controller_phase_s);
    r.integer("rng_seed", p.rng_seed);
    r.reject_unknown();
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), kind_(kind), diagnostics_(std::move(diagnostics)) {}

ClusterConfig cluster_config_from_json(const json& doc, const std::string& prefix) {
    std::vector<Diagnostic> diags;
    ClusterConfig cfg;
    ObjectReader top(doc, prefix, diags);
    if (!top.ok())
        throw ConfigError(ConfigError::Kind::Validation, diags);

    // Parameter blocks first: host thresholds default through per_core_factor.
    if (const json* c = top.get("controller"))
        read_controller(*c, top.at("controller"), cfg.controller, diags);
    if (const json* t = top.get("telemetry"))
        read_telemetry(*t, top.at("telemetry"), cfg.telemetry, diags);
    if (const json* t = top.get("timing"))
        read_timing(*t, top.at("timing"), cfg.timing, diags);

    for (auto& msg : validate(cfg.controller))
        diags.push_back({top.at("controller"), std::move(msg)});
    if (cfg.telemetry.detection_latency_s < 1)
        diags.push_back({top.at("telemetry.detection_latency_s"), "must be >= 1"});
    if (cfg.telemetry.heartbeat_period_s < 1)
        diags.push_back({top.at("telemetry.heartbeat_period_s"), "must be >= 1"});
    if (cfg.timing.boot_jitter_s < 0)
        diags.push_back({top.at("timing.boot_jitter_s"), "must be >= 0"});
    if (cfg.timing.reinstall_jitter_s < 0)
        diags.push_back({top.at("timing.reinstall_jitter_s"), "must be >= 0"});
    if (cfg.timing.controller_phase_s < 0 || cfg.timing.controller_phase_s >= cfg.controller.scan_period_s)
        diags.push_back({top.at("timing.controller_phase_s"), "must be in [0, scan_period_s)"});

    if (const json* profiles = top.get("profiles")) {
        if (!profiles->is_object()) {
            diags.push_back({top.at("profiles"), "expected an object keyed by profile name"});
        } else {
            for (auto it = profiles->begin(); it != profiles->end(); ++it) {
                BootProfile p;
                p.name = it.key();
                const std::string path = top.at("profiles." + it.key());
                if (!valid_id(p.name))
                    diags.push_back({path, "profile name must be printable without spaces or ,;:\""});
                ObjectReader r(it.value(), path, diags);
                r.integer("pxe_setup_s", p.pxe_setup_s);
                r.integer("boot_s", p.boot_s);
                r.integer("install_s", p.install_s);
                r.string("middleware", p.middleware);
                r.reject_unknown();
                for (auto [key, value] : {std::pair{"pxe_setup_s", p.pxe_setup_s},
                                          std::pair{"boot_s", p.boot_s},
                                          std::pair{"install_s", p.install_s}})
                    if (value < 1)
                        diags.push_back({path + "." + key, "duration must be >= 1"});
                const Seconds local = p.pxe_setup_s + p.boot_s;
                const Seconds install = 2 * p.pxe_setup_s + p.install_s + p.boot_s;
                if (cfg.timing.boot_jitter_s >= local)
                    diags.push_back({top.at("timing.boot_jitter_s"),
                                     "must be below the local boot time of profile " + p.name});
                if (cfg.timing.reinstall_jitter_s >= install)
                    diags.push_back({top.at("timing.reinstall_jitter_s"),
                                     "must be below the install time of profile " + p.name});
                cfg.profiles.emplace(p.name, std::move(p));
            }
        }
    }

    std::set<std::string> host_ids;
    if (const json* hosts = top.get("hosts")) {
        if (!hosts->is_array()) {
            diags.push_back({top.at("hosts"), "expected an array"});
        } else {
            for (std::size_t i = 0; i < hosts->size(); ++i) {
                const std::string path = top.at("hosts[" + std::to_string(i) + "]");
                ObjectReader r((*hosts)[i], path, diags);
                PhysicalHost h;
                h.ram_mb = 1024;
                r.string("host_id", h.host_id, true);
                const bool have_cpus = r.integer("cpu_count", h.cpu_count, true);
                r.integer("ram_mb", h.ram_mb);
                const bool explicit_threshold = r.number("load_threshold", h.load_threshold);
                std::string power = "On";
                if (r.string("power_state", power) && power != "On" && power != "Off")
                    diags.push_back({path + ".power_state", "expected \"On\" or \"Off\""});
                h.power_state = power == "Off" ? PowerState::Off : PowerState::On;
                if (r.get("hosted_vms"))
                    diags.push_back({path + ".hosted_vms", "derived from vms[].bound_host; remove it"});
                r.reject_unknown();

                if (have_cpus && h.cpu_count < 1)
                    diags.push_back({path + ".cpu_count", "must be >= 1"});
                if (h.ram_mb < 1)
                    diags.push_back({path + ".ram_mb", "must be >= 1"});
                if (!explicit_threshold && h.cpu_count >= 1 && cfg.controller.per_core_factor > 0)
                    h.load_threshold = default_threshold(h.cpu_count, cfg.controller.per_core_factor);
                if (!(h.load_threshold > 0) || !std::isfinite(h.load_threshold))
                    diags.push_back({path + ".load_threshold",
                                     "non-positive threshold for host " + h.host_id});
                if (!h.host_id.empty() && !valid_id(h.host_id))
                    diags.push_back({path + ".host_id", "id must be printable without spaces or ,;:\""});
                if (!h.host_id.empty() && !host_ids.insert(h.host_id).second)
                    diags.push_back({path + ".host_id", "duplicate host id " + h.host_id});
                cfg.hosts.push_back(std::move(h));
            }
        }
    }

    std::set<std::string> vm_ids;
    std::set<std::uint64_t> macs;
    if (const json* vms = top.get("vms")) {
        if (!vms->is_array()) {
            diags.push_back({top.at("vms"), "expected an array"});
        } else {
            for (std::size_t i = 0; i < vms->size(); ++i) {
                const std::string path = top.at("vms[" + std::to_string(i) + "]");
                ObjectReader r((*vms)[i], path, diags);
                VirtualMachine v;
                std::string mac, host, lifecycle = "Running";
                r.string("vm_id", v.vm_id, true);
                const bool have_mac = r.string("mac", mac, true);
                const bool have_host = r.string("bound_host", host, true);
                r.boolean("reinstall_allowed", v.reinstall_allowed);
                const bool have_profile = r.string("boot_profile", v.boot_profile, true);
                r.number("load_contribution", v.load_contribution);
                r.string("lifecycle", lifecycle);
                r.reject_unknown();

                if (!v.vm_id.empty() && !valid_id(v.vm_id))
                    diags.push_back({path + ".vm_id", "id must be printable without spaces or ,;:\""});
                if (!v.vm_id.empty() && !vm_ids.insert(v.vm_id).second)
                    diags.push_back({path + ".vm_id", "duplicate vm id " + v.vm_id});
                if (have_mac) {
                    if (auto parsed = MacAddress::parse(mac)) {
                        v.mac = *parsed;
                        if (!macs.insert(parsed->bits()).second)
                            diags.push_back({path + ".mac", "duplicate mac " + parsed->str()});
                    } else {
                        diags.push_back({path + ".mac", "malformed mac " + mac});
                    }
                }
                if (have_host) {
                    if (!host_ids.count(host))
                        diags.push_back({path + ".bound_host", "undeclared host " + host});
                    v.bound_host = host;
                }
                if (have_profile && !cfg.profiles.count(v.boot_profile))
                    diags.push_back({path + ".boot_profile", "undeclared profile " + v.boot_profile});
                if (!(v.load_contribution >= 0) || !std::isfinite(v.load_contribution))
                    diags.push_back({path + ".load_contribution", "must be >= 0"});
                if (lifecycle == "Running")
                    v.lifecycle = Lifecycle::Running;
                else if (lifecycle == "Halted")
                    v.lifecycle = Lifecycle::Halted;
                else
                    diags.push_back({path + ".lifecycle", "initial lifecycle must be Running or Halted"});
                cfg.vms.push_back(std::move(v));
            }
        }
    }

    for (const auto& h : cfg.hosts) {
        if (h.power_state != PowerState::Off)
            continue;
        for (std::size_t i = 0; i < cfg.vms.size(); ++i)
            if (cfg.vms[i].bound_host == h.host_id && cfg.vms[i].lifecycle == Lifecycle::Running)
                diags.push_back({top.at("vms[" + std::to_string(i) + "].lifecycle"),
                                 "Running on powered-off host " + h.host_id});
    }

    top.reject_unknown();
    if (!diags.empty())
        throw ConfigError(ConfigError::Kind::Validation, std::move(diags));
    return cfg;
}

ClusterConfig load_cluster_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::Parse, {{"<document>", e.what()}});
    }
    return cluster_config_from_json(doc);
}

json to_json(const ClusterConfig& cfg) {
    json doc;
    doc["hosts"] = json::array();
    for (const auto& h : cfg.hosts)
        doc["hosts"].push_back({{"host_id", h.host_id},
                                {"cpu_count", h.cpu_count},
                                {"ram_mb", h.ram_mb},
                                {"load_threshold", h.load_threshold},
                                {"power_state", to_string(h.power_state)}});
    doc["vms"] = json::array();
    for (const auto& v : cfg.vms)
        doc["vms"].push_back({{"vm_id", v.vm_id},
                              {"mac", v.mac.str()},
                              {"bound_host", v.bound_host.value_or("")},
                              {"reinstall_allowed", v.reinstall_allowed},
                              {"boot_profile", v.boot_profile},
                              {"load_contribution", v.load_contribution},
                              {"lifecycle", to_string(v.lifecycle)}});
    doc["profiles"] = json::object();
    for (const auto& [name, p] : cfg.profiles)
        doc["profiles"][name] = {{"pxe_setup_s", p.pxe_setup_s},
                                 {"boot_s", p.boot_s},
                                 {"install_s", p.install_s},
                                 {"middleware", p.middleware}};
    const auto& c = cfg.controller;
    doc["controller"] = {{"scan_period_s", c.scan_period_s},   {"t1_s", c.t1_s},
                         {"t2_s", c.t2_s},                     {"reboot_step_enabled", c.reboot_step_enabled},
                         {"reinstall_timeout_s", c.reinstall_timeout_s}, {"max_cycles", c.max_cycles},
                         {"per_core_factor", c.per_core_factor}};
    const auto& t = cfg.telemetry;
    doc["telemetry"] = {{"detection_latency_s", t.detection_latency_s},
                        {"heartbeat_period_s", t.heartbeat_period_s}};
    if (t.smoothing_alpha)
        doc["telemetry"]["smoothing"] = {{"exponential", *t.smoothing_alpha}};
    else
        doc["telemetry"]["smoothing"] = "none";
    const auto& tm = cfg.timing;
    doc["timing"] = {{"boot_jitter_s", tm.boot_jitter_s},
                     {"reinstall_jitter_s", tm.reinstall_jitter_s},
                     {"controller_phase_s", tm.controller_phase_s},
                     {"rng_seed", tm.rng_seed}};
    return doc;
}

ClusterState initial_state(const ClusterConfig& cfg) {
    ClusterState state;
    for (const auto& h : cfg.hosts) {
        PhysicalHost copy = h;
        copy.hosted_vms.clear();
        state.hosts.emplace(copy.host_id, std::move(copy));
    }
    for (const auto& v : cfg.vms) {
        VirtualMachine copy = v;
        copy.bound_host.reset();
        state.vms.emplace(copy.vm_id, std::move(copy));
        state.bind(v.vm_id, v.bound_host);
    }
    state.check_invariants();
    return state;
}

}  // namespace relaxha
