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

#include "relaxha/scenario.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "relaxha/report.hpp"

namespace relaxha {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::ios_base::failure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FailureInjection parse_injection(const json& j, const std::string& path, std::vector<Diagnostic>& diags) {
    FailureInjection inj;
    if (!j.is_object()) {
        diags.push_back({path, "expected an object"});
        return inj;
    }
    auto field = [&](const char* key) -> const json* {
        auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    };
    std::set<std::string> allowed = {"at", "kind"};

    if (const json* at = field("at"); at && at->is_number_integer())
        inj.at = at->get<Seconds>();
    else
        diags.push_back({path + ".at", "required integer"});

    const json* kind = field("kind");
    std::optional<FailureKind> k;
    if (kind && kind->is_string())
        k = failure_kind_from_string(kind->get<std::string>());
    if (!k) {
        diags.push_back({path + ".kind", "expected one of nondestructive_crash, destructive_crash, "
                                         "host_failure, power_glitch, load_spike"});
        return inj;
    }
    inj.kind = *k;

    auto one_string = [&](const char* key) {
        allowed.insert(key);
        if (const json* v = field(key); v && v->is_string())
            inj.targets.push_back(v->get<std::string>());
        else
            diags.push_back({path + "." + key, "required string"});
    };
    switch (inj.kind) {
    case FailureKind::NonDestructiveCrash:
    case FailureKind::DestructiveCrash: one_string("vm_id"); break;
    case FailureKind::PhysicalHostFailure: one_string("host_id"); break;
    case FailureKind::PowerGlitch:
        allowed.insert("host_ids");
        if (const json* v = field("host_ids"); v && v->is_array() && !v->empty()) {
            for (const auto& h : *v) {
                if (h.is_string())
                    inj.targets.push_back(h.get<std::string>());
                else
                    diags.push_back({path + ".host_ids", "expected strings"});
            }
        } else {
            diags.push_back({path + ".host_ids", "required non-empty array"});
        }
        break;
    case FailureKind::LoadSpike:
        one_string("host_id");
        allowed.insert("extra_load");
        allowed.insert("duration_s");
        if (const json* v = field("extra_load"); v && v->is_number() && v->get<double>() >= 0)
            inj.extra_load = v->get<double>();
        else
            diags.push_back({path + ".extra_load", "required non-negative number"});
        if (const json* v = field("duration_s"); v && v->is_number_integer() && v->get<Seconds>() >= 1)
            inj.duration_s = v->get<Seconds>();
        else
            diags.push_back({path + ".duration_s", "required integer >= 1"});
        break;
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            diags.push_back({path + "." + it.key(), "unknown key"});
    return inj;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void merge_into(SimReport& out, SimReport&& part) {
    for (auto& ep : part.episodes) {
        ep.id = static_cast<int>(out.episodes.size());
        out.episodes.push_back(std::move(ep));
    }
}

}  // namespace

Scenario load_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::Parse, {{"<document>", e.what()}});
    }
    if (!doc.is_object())
        throw ConfigError(ConfigError::Kind::Validation, {{"<document>", "expected an object"}});

    std::vector<Diagnostic> diags;
    Scenario sc;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        static const std::set<std::string> known = {"cluster", "injections", "horizon_s", "replications", "seed"};
        if (!known.count(it.key()))
            diags.push_back({it.key(), "unknown key"});
    }

    bool have_cluster = false;
    if (auto it = doc.find("cluster"); it == doc.end()) {
        diags.push_back({"cluster", "required key missing"});
    } else {
        try {
            if (it->is_string()) {
                const std::string text_cfg = read_file(base_dir / it->get<std::string>());
                sc.cluster = load_cluster_config(text_cfg);
            } else {
                sc.cluster = cluster_config_from_json(*it, "cluster");
            }
            have_cluster = true;
        } catch (const ConfigError& e) {
            if (e.kind() == ConfigError::Kind::Parse)
                throw;
            diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
        }
    }

    if (auto it = doc.find("horizon_s"); it != doc.end() && it->is_number_integer() && it->get<Seconds>() >= 0)
        sc.horizon_s = it->get<Seconds>();
    else
        diags.push_back({"horizon_s", "required non-negative integer"});

    if (auto it = doc.find("replications"); it != doc.end()) {
        if (it->is_number_integer() && it->get<int>() >= 1)
            sc.replications = it->get<int>();
        else
            diags.push_back({"replications", "must be an integer >= 1"});
    }
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (it->is_number_unsigned())
            sc.seed = it->get<std::uint64_t>();
        else
            diags.push_back({"seed", "must be a non-negative integer"});
    }

    if (auto it = doc.find("injections"); it != doc.end()) {
        if (!it->is_array()) {
            diags.push_back({"injections", "expected an array"});
        } else {
            for (std::size_t i = 0; i < it->size(); ++i)
                sc.injections.push_back(
                    parse_injection((*it)[i], "injections[" + std::to_string(i) + "]", diags));
        }
    }

    if (have_cluster) {
        std::set<std::string> hosts, vms;
        for (const auto& h : sc.cluster.hosts)
            hosts.insert(h.host_id);
        for (const auto& v : sc.cluster.vms)
            vms.insert(v.vm_id);
        for (std::size_t i = 0; i < sc.injections.size(); ++i) {
            const auto& inj = sc.injections[i];
            const std::string path = "injections[" + std::to_string(i) + "]";
            const bool vm = inj.kind == FailureKind::NonDestructiveCrash || inj.kind == FailureKind::DestructiveCrash;
            for (const auto& t : inj.targets)
                if (!(vm ? vms : hosts).count(t))
                    diags.push_back({path, std::string("unknown ") + (vm ? "vm " : "host ") + t});
            if (inj.at < 0 || inj.at > sc.horizon_s)
                diags.push_back({path + ".at", "must lie within [0, horizon_s]"});
        }
    }

    if (!diags.empty())
        throw ConfigError(ConfigError::Kind::Validation, std::move(diags));
    return sc;
}

SimReport run_replications(const Scenario& scenario, std::uint64_t seed,
                           const std::function<SimOptions(int)>& make_options) {
    SimReport out;
    for (int i = 0; i < scenario.replications; ++i) {
        ClusterConfig cfg = scenario.cluster;
        cfg.timing.rng_seed = replication_seed(seed, static_cast<std::uint64_t>(i));
        SimOptions options = make_options ? make_options(i) : SimOptions{};
        merge_into(out, run_scenario(cfg, scenario.injections, scenario.horizon_s, options));
    }
    out.aggregates = summarize(out.episodes, SimReport::kDefaultBinWidth);
    return out;
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
    if (name == "nondestructive")
        return Experiment::NonDestructive;
    if (name == "destructive")
        return Experiment::Destructive;
    return std::nullopt;
}

ExperimentPreset preset(Experiment experiment) {
    ClusterConfig cfg;
    for (const char* id : {"alfa01", "alfa02"}) {
        PhysicalHost h;
        h.host_id = id;
        h.cpu_count = 8;
        h.ram_mb = 16384;
        h.load_threshold = default_threshold(h.cpu_count);
        cfg.hosts.push_back(h);
    }
    BootProfile guest;
    guest.name = "redhat-guest";
    guest.middleware = "testbed";
    cfg.profiles.emplace(guest.name, guest);

    VirtualMachine vm;
    vm.vm_id = "crashvm";
    vm.mac = *MacAddress::parse("00:16:3e:00:00:01");
    vm.bound_host = "alfa01";
    vm.boot_profile = guest.name;
    cfg.vms.push_back(vm);

    ExperimentPreset p;
    p.victim = vm.vm_id;
    if (experiment == Experiment::NonDestructive) {
        p.name = "nondestructive-v1";
        p.crash = FailureKind::NonDestructiveCrash;
        p.horizon_s = 2400;
    } else {
        // Reinstall right after detection: no reboot attempt, and the restart
        // and reinstall steps follow each other within the detecting scan.
        p.name = "destructive-v1";
        p.crash = FailureKind::DestructiveCrash;
        cfg.controller.reboot_step_enabled = false;
        cfg.controller.t1_s = 0;
        cfg.controller.t2_s = 0;
        p.horizon_s = 2400;
    }
    p.cluster = std::move(cfg);
    return p;
}

Seconds crash_time(const ExperimentPreset& p, std::uint64_t episode_seed) {
    const auto period = static_cast<std::uint64_t>(p.cluster.controller.scan_period_s);
    return p.crash_window_start_s + static_cast<Seconds>(splitmix64(episode_seed) % period);
}

SimReport replicate(Experiment experiment, int n, std::uint64_t seed, unsigned workers) {
    if (n < 1)
        throw std::invalid_argument("replicate: n must be >= 1");
    const ExperimentPreset p = preset(experiment);
    std::vector<SimReport> parts(static_cast<std::size_t>(n));

    auto run_one = [&](std::size_t i) {
        const std::uint64_t s = replication_seed(seed, i);
        ClusterConfig cfg = p.cluster;
        cfg.timing.rng_seed = s;
        FailureInjection inj{crash_time(p, s), p.crash, {p.victim}, 0.0, 0};
        parts[i] = run_scenario(cfg, {inj}, p.horizon_s, SimOptions{.check_invariants = false});
    };

    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    if (workers == 1) {
        for (std::size_t i = 0; i < parts.size(); ++i)
            run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < parts.size(); i += workers)
                    run_one(i);
            });
        for (auto& t : pool)
            t.join();
    }

    SimReport out;
    for (auto& part : parts)
        merge_into(out, std::move(part));
    out.aggregates = summarize(out.episodes, SimReport::kDefaultBinWidth);
    return out;
}

}  // namespace relaxha
