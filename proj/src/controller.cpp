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

#include "relaxha/controller.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace relaxha {

std::vector<std::string> validate(const ControllerParams& p) {
    std::vector<std::string> errors;
    if (p.scan_period_s < 1)
        errors.push_back("controller.scan_period_s must be >= 1");
    // A zero wait escalates within the scan that issued the previous step.
    auto wait_ok = [&](Seconds t) { return t == 0 || t >= p.scan_period_s; };
    if (!wait_ok(p.t1_s))
        errors.push_back("controller.t1_s must be 0 or >= scan_period_s");
    if (!wait_ok(p.t2_s))
        errors.push_back("controller.t2_s must be 0 or >= scan_period_s");
    if (p.reinstall_timeout_s < p.scan_period_s || p.reinstall_timeout_s < 1)
        errors.push_back("controller.reinstall_timeout_s must be >= scan_period_s");
    if (p.max_cycles < 1)
        errors.push_back("controller.max_cycles must be >= 1");
    if (!(p.per_core_factor > 0))
        errors.push_back("controller.per_core_factor must be > 0");
    return errors;
}

std::string to_string(const Phase& p) {
    struct Visitor {
        std::string operator()(const phase::Healthy&) const { return "Healthy"; }
        std::string operator()(const phase::RebootIssued& x) const {
            return "RebootIssued(" + std::to_string(x.deadline) + ")";
        }
        std::string operator()(const phase::RestartIssued& x) const {
            return "RestartIssued(" + std::to_string(x.deadline) + ")";
        }
        std::string operator()(const phase::ReinstallIssued& x) const {
            return "ReinstallIssued(" + std::to_string(x.deadline) + ")";
        }
        std::string operator()(const phase::AwaitingCapacity& x) const {
            return x.pending == Intervention::Restart ? "AwaitingCapacity(restart)"
                                                      : "AwaitingCapacity(reinstall)";
        }
        std::string operator()(const phase::RequiresHuman&) const { return "RequiresHuman"; }
    };
    return std::visit(Visitor{}, p);
}

std::string_view to_string(ActionKind k) {
    switch (k) {
    case ActionKind::Reboot: return "reboot";
    case ActionKind::Restart: return "restart";
    case ActionKind::Reinstall: return "reinstall";
    case ActionKind::Defer: return "defer";
    case ActionKind::NoOp: return "noop";
    }
    return "?";
}

std::string to_string(const Action& a) {
    std::string out(to_string(a.kind));
    if (!a.vm_id.empty())
        out += " " + a.vm_id;
    if (!a.target_host.empty())
        out += " " + a.target_host;
    return out;
}

PlacementView make_placement_view(const ClusterState& state, const MonitorSnapshot& snapshot) {
    PlacementView view;
    view.reserve(state.hosts.size());
    for (const auto& [id, h] : state.hosts) {
        HostView hv;
        hv.host_id = id;
        hv.power_state = h.power_state;
        hv.monitored_up = snapshot.verdict(id) == Verdict::Up;
        hv.load = host_load(state, id);
        hv.vm_count = static_cast<int>(h.hosted_vms.size());
        hv.load_threshold = h.load_threshold;
        if (h.power_state == PowerState::On) {
            for (const auto& vm_id : h.hosted_vms) {
                const VirtualMachine& v = state.vm(vm_id);
                if (v.lifecycle == Lifecycle::Booting || v.lifecycle == Lifecycle::Installing)
                    hv.load += v.load_contribution;
            }
        }
        view.push_back(std::move(hv));
    }
    return view;
}

std::optional<std::string> choose_host(const PlacementView& view, const VirtualMachine& vm) {
    const HostView* best = nullptr;
    auto key = [](const HostView& h) { return std::tie(h.load, h.vm_count, h.host_id); };
    for (const HostView& h : view) {
        if (h.power_state != PowerState::On || !h.monitored_up)
            continue;
        if (!(h.load + vm.load_contribution < h.load_threshold))
            continue;
        if (!best || key(h) < key(*best))
            best = &h;
    }
    if (!best)
        return std::nullopt;
    return best->host_id;
}

namespace {

/// Placement view that is charged as VMs are placed within one call, so a
/// batch of placements never piles onto a host whose view predates them.
class WorkingView {
public:
    explicit WorkingView(PlacementView view) : view_(std::move(view)) {}

    std::optional<std::string> place(const VirtualMachine& vm) {
        release(vm);
        auto target = choose_host(view_, vm);
        if (target) {
            HostView& h = at(*target);
            h.load += vm.load_contribution;
            h.vm_count += 1;
            placed_[vm.vm_id] = *target;
        }
        return target;
    }

    const HostView* find(const std::string& host_id) const {
        for (const HostView& h : view_)
            if (h.host_id == host_id)
                return &h;
        return nullptr;
    }

private:
    HostView& at(const std::string& host_id) {
        for (HostView& h : view_)
            if (h.host_id == host_id)
                return h;
        throw UnknownIdError(host_id);
    }

    // Takes the VM's current claim off the view before it is placed again.
    void release(const VirtualMachine& vm) {
        if (auto it = placed_.find(vm.vm_id); it != placed_.end()) {
            HostView& h = at(it->second);
            h.load -= vm.load_contribution;
            h.vm_count -= 1;
            placed_.erase(it);
            return;
        }
        if (!released_.insert(vm.vm_id).second || !vm.bound_host)
            return;
        for (HostView& h : view_) {
            if (h.host_id != *vm.bound_host)
                continue;
            if (h.power_state == PowerState::On &&
                (vm.lifecycle == Lifecycle::Booting || vm.lifecycle == Lifecycle::Installing ||
                 vm.lifecycle == Lifecycle::Running))
                h.load -= vm.load_contribution;
            h.vm_count -= 1;
        }
    }

    PlacementView view_;
    std::map<std::string, std::string> placed_;
    std::set<std::string> released_;
};

}  // namespace

std::vector<Action> plan_host_failover(const std::string& failed_host,
                                       const std::vector<VirtualMachine>& hosted_vms,
                                       const PlacementView& view) {
    WorkingView working(view);
    if (const HostView* h = working.find(failed_host))
        RELAXHA_CHECK(!h->monitored_up || h->power_state == PowerState::Off,
                      failed_host + " is not down");

    std::vector<const VirtualMachine*> order;
    for (const auto& v : hosted_vms)
        order.push_back(&v);
    std::sort(order.begin(), order.end(),
              [](const VirtualMachine* a, const VirtualMachine* b) { return a->vm_id < b->vm_id; });

    std::vector<Action> actions;
    for (const VirtualMachine* v : order) {
        if (auto target = working.place(*v))
            actions.push_back(Action::restart(v->vm_id, *target));
        else
            actions.push_back(Action::defer(v->vm_id));
    }
    return actions;
}

namespace {

class Escalator {
public:
    Escalator(const ControllerParams& params, Seconds now, WorkingView& view,
              std::vector<Action>& actions)
        : p_(params), now_(now), view_(view), actions_(actions) {}

    void on_down(EscalationRecord& rec, const VirtualMachine& vm) {
        if (std::holds_alternative<phase::Healthy>(rec.phase)) {
            rec.episode_started_at = now_;
            rec.cycles = 0;
            if (p_.reboot_step_enabled) {
                actions_.push_back(Action::reboot(vm.vm_id));
                rec.phase = phase::RebootIssued{now_ + p_.t1_s};
            } else {
                intervene(rec, vm, Intervention::Restart);
            }
        }
        advance(rec, vm);
    }

    void on_unobserved(EscalationRecord& rec, const VirtualMachine& vm) {
        // Parked VMs are not monitored; only their placement retry matters.
        if (std::holds_alternative<phase::AwaitingCapacity>(rec.phase))
            advance(rec, vm);
    }

private:
    // Escalates while the current step's deadline has passed. Terminates:
    // each pass either stops, or consumes a cycle, or moves strictly
    // forward through Reboot -> Restart -> Reinstall.
    void advance(EscalationRecord& rec, const VirtualMachine& vm) {
        for (;;) {
            if (auto* r = std::get_if<phase::RebootIssued>(&rec.phase)) {
                if (now_ < r->deadline)
                    return;
                intervene(rec, vm, Intervention::Restart);
            } else if (auto* r = std::get_if<phase::RestartIssued>(&rec.phase)) {
                if (now_ < r->deadline)
                    return;
                if (vm.reinstall_allowed) {
                    intervene(rec, vm, Intervention::Reinstall);
                } else if (!end_cycle(rec)) {
                    return;
                } else {
                    intervene(rec, vm, Intervention::Restart);
                }
            } else if (auto* r = std::get_if<phase::ReinstallIssued>(&rec.phase)) {
                if (now_ < r->deadline)
                    return;
                if (!end_cycle(rec))
                    return;
                intervene(rec, vm, Intervention::Restart);
            } else if (auto* r = std::get_if<phase::AwaitingCapacity>(&rec.phase)) {
                const Intervention pending = r->pending;
                if (!place(rec, vm, pending))
                    return;
            } else {
                return;
            }
        }
    }

    // Counts a finished cycle; false once the VM has been given up on.
    bool end_cycle(EscalationRecord& rec) {
        rec.cycles += 1;
        if (rec.cycles >= p_.max_cycles) {
            rec.phase = phase::RequiresHuman{};
            return false;
        }
        return true;
    }

    void intervene(EscalationRecord& rec, const VirtualMachine& vm, Intervention what) {
        if (!place(rec, vm, what) && !std::holds_alternative<phase::AwaitingCapacity>(rec.phase)) {
            actions_.push_back(Action::defer(vm.vm_id));
            rec.phase = phase::AwaitingCapacity{what};
        }
    }

    bool place(EscalationRecord& rec, const VirtualMachine& vm, Intervention what) {
        auto target = view_.place(vm);
        if (!target)
            return false;
        if (what == Intervention::Restart) {
            actions_.push_back(Action::restart(vm.vm_id, *target));
            rec.phase = phase::RestartIssued{now_ + p_.t2_s};
        } else {
            actions_.push_back(Action::reinstall(vm.vm_id, *target));
            rec.phase = phase::ReinstallIssued{now_ + p_.reinstall_timeout_s};
        }
        return true;
    }

    const ControllerParams& p_;
    Seconds now_;
    WorkingView& view_;
    std::vector<Action>& actions_;
};

}  // namespace

TickResult tick(const std::map<std::string, EscalationRecord>& records,
                const MonitorSnapshot& snapshot, const PlacementView& view, Seconds now,
                const ControllerParams& params, const std::map<std::string, VirtualMachine>& vms) {
    RELAXHA_CHECK(snapshot.taken_at == now, "snapshot not taken at scan instant");

    TickResult out;
    out.records = records;
    WorkingView working(view);
    Escalator escalator(params, now, working, out.actions);

    for (const auto& [vm_id, vm] : vms) {
        auto [it, inserted] = out.records.try_emplace(vm_id);
        EscalationRecord& rec = it->second;
        if (inserted)
            rec.vm_id = vm_id;

        const auto verdict = snapshot.verdict(vm_id);
        if (verdict == Verdict::Up) {
            rec.phase = phase::Healthy{};
            rec.episode_started_at.reset();
            rec.cycles = 0;
            rec.last_seen_up_at = now;
        } else if (verdict == Verdict::Down) {
            escalator.on_down(rec, vm);
        } else {
            escalator.on_unobserved(rec, vm);
        }
    }
    return out;
}

}  // namespace relaxha
