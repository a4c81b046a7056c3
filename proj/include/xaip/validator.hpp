#pragma once

#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/model.hpp"
#include "xaip/plan.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Happening semantics
// -------------------
// Events at one instant form a happening. Within a happening, timed initial
// literals and action ends are processed first: end conditions are checked
// against the state before the happening, then their effects are applied
// (deletes before adds). Action starts follow: start conditions are checked
// against the resulting state and start effects applied. Over-all conditions
// must hold in every state from a step's start happening up to, but not
// including, its end happening.
//
// Two distinct events of one happening are mutex when one deletes a literal
// the other adds, checks or deletes, or when both add the same literal.
// Happenings closer than `epsilon` are treated as one for the mutex check.

namespace xaip {

struct Event {
    enum class Kind { action_start, action_end, til };

    Kind kind = Kind::action_start;
    /// Plan step index, or TIL index for `til` events.
    std::size_t source = 0;

    auto operator<=>(const Event&) const = default;
};

struct Happening {
    decimal time;
    std::vector<Event> events;

    bool operator==(const Happening&) const = default;
};

using Facts = std::set<Atom>;

struct State {
    Facts facts;
    decimal time;

    bool operator==(const State&) const = default;
    bool holds(const Atom& a) const { return facts.count(a) > 0; }
};

enum class FailureReason {
    start_condition,
    over_all_condition,
    end_condition,
    mutex_violation,
    goal_unsatisfied,
    invalid_duration,
};

inline std::string_view to_string(FailureReason r) {
    switch (r) {
    case FailureReason::start_condition: return "unsatisfied start condition";
    case FailureReason::over_all_condition: return "unsatisfied over-all condition";
    case FailureReason::end_condition: return "unsatisfied end condition";
    case FailureReason::mutex_violation: return "mutex violation";
    case FailureReason::goal_unsatisfied: return "goal unsatisfied";
    case FailureReason::invalid_duration: return "invalid duration";
    }
    return "";
}

struct Failure {
    decimal time;
    FailureReason reason = FailureReason::start_condition;
    std::optional<Atom> literal;
    std::optional<std::size_t> step;
    std::string detail;

    bool operator==(const Failure&) const = default;
};

struct TraceEntry {
    Happening happening;
    State state;

    bool operator==(const TraceEntry&) const = default;
};

struct ValidationReport {
    bool valid = false;
    decimal cost;
    std::optional<Failure> failure;
    std::vector<TraceEntry> trace;

    bool operator==(const ValidationReport&) const = default;
};

/// Groups step starts, step ends and TILs by time, ascending.
inline std::vector<Happening> build_happenings(const TimedPlan& plan, const std::vector<TimedInitialLiteral>& tils) {
    std::map<decimal, std::vector<Event>> by_time;
    for (std::size_t i = 0; i < tils.size(); ++i)
        by_time[tils[i].time].push_back({Event::Kind::til, i});
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        by_time[plan.steps[i].end()].push_back({Event::Kind::action_end, i});
        by_time[plan.steps[i].start].push_back({Event::Kind::action_start, i});
    }
    std::vector<Happening> out;
    for (auto& [t, events] : by_time) {
        std::stable_sort(events.begin(), events.end(),
                         [](const Event& a, const Event& b) { return static_cast<int>(a.kind) > static_cast<int>(b.kind); });
        out.push_back({t, std::move(events)});
    }
    return out;
}

struct CausalNode {
    enum class Kind { init, step, goal };

    Kind kind = Kind::init;
    std::size_t step = 0;

    auto operator<=>(const CausalNode&) const = default;
};

struct CausalEdge {
    CausalNode producer;
    CausalNode consumer;
    Atom literal;

    auto operator<=>(const CausalEdge&) const = default;
};

/// Producer/consumer links of a valid plan. `steps` keeps the plan so that
/// nodes can be labelled and compared across plans.
struct CausalGraph {
    std::vector<PlanStep> steps;
    std::vector<CausalEdge> edges;

    bool operator==(const CausalGraph&) const = default;

    std::vector<CausalNode> nodes() const {
        std::vector<CausalNode> out{{CausalNode::Kind::init, 0}};
        for (std::size_t i = 0; i < steps.size(); ++i)
            out.push_back({CausalNode::Kind::step, i});
        out.push_back({CausalNode::Kind::goal, 0});
        return out;
    }
};

namespace detail {

struct EventSets {
    const std::vector<Atom>* checks = nullptr;
    std::vector<Atom> adds;
    std::vector<Atom> dels;
};

inline bool intersects(const std::vector<Atom>& a, const std::vector<Atom>& b) {
    for (const auto& x : a)
        if (std::find(b.begin(), b.end(), x) != b.end())
            return true;
    return false;
}

inline std::optional<Atom> first_common(const std::vector<Atom>& a, const std::vector<Atom>& b) {
    for (const auto& x : a)
        if (std::find(b.begin(), b.end(), x) != b.end())
            return x;
    return std::nullopt;
}

/// The literal over which two events interfere, if any.
inline std::optional<Atom> interference(const EventSets& x, const EventSets& y) {
    static const std::vector<Atom> none;
    const auto& xc = x.checks ? *x.checks : none;
    const auto& yc = y.checks ? *y.checks : none;
    for (const auto* other : {&y.adds, &yc, &y.dels})
        if (auto a = first_common(x.dels, *other))
            return a;
    for (const auto* other : {&x.adds, &xc, &x.dels})
        if (auto a = first_common(y.dels, *other))
            return a;
    return first_common(x.adds, y.adds);
}

class Simulator {
public:
    Simulator(const Model& model, const TimedPlan& plan, bool track_causes = false)
        : model_(model), plan_(plan), track_(track_causes) {
        for (const auto& s : plan.steps)
            ops_.push_back(instantiate(model, s.action));
        happenings_ = build_happenings(plan, model.problem.tils);
        state_.facts.insert(model.problem.init.begin(), model.problem.init.end());
        if (track_)
            for (const auto& a : model.problem.init)
                achiever_[a] = {CausalNode::Kind::init, 0};
    }

    /// Checks every step's duration against the model.
    std::optional<Failure> check_durations() const {
        for (std::size_t i = 0; i < plan_.steps.size(); ++i) {
            const auto& s = plan_.steps[i];
            GroundAction g = ground_action(model_, s.action.name, s.action.args);
            if (g.duration != s.duration)
                return Failure{s.start, FailureReason::invalid_duration, std::nullopt, i,
                               s.action.signature() + " has duration " + s.duration.to_string() + ", model says " +
                                   g.duration.to_string()};
        }
        return std::nullopt;
    }

    /// Runs happenings with time < limit (or <= limit when inclusive).
    /// Returns the first failure, if any.
    std::optional<Failure> run(std::optional<decimal> limit = std::nullopt, bool inclusive = true) {
        for (std::size_t h = 0; h < happenings_.size(); ++h) {
            const Happening& hap = happenings_[h];
            if (limit && (inclusive ? hap.time > *limit : hap.time >= *limit))
                break;
            if (auto f = check_mutex(h))
                return f;
            if (auto f = apply(hap))
                return f;
            trace_.push_back({hap, state_});
        }
        return std::nullopt;
    }

    std::optional<Failure> check_goal() const {
        for (const auto& g : model_.problem.goal)
            if (!state_.holds(g))
                return Failure{state_.time, FailureReason::goal_unsatisfied, g, std::nullopt,
                               "goal literal " + g.to_string() + " does not hold at the end of the plan"};
        return std::nullopt;
    }

    void link_goal() {
        for (const auto& g : model_.problem.goal)
            add_edge(g, {CausalNode::Kind::goal, 0});
    }

    const State& state() const { return state_; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    std::vector<CausalEdge> edges() const { return {edges_.begin(), edges_.end()}; }

private:
    EventSets sets_of(const Event& e) const {
        EventSets s;
        if (e.kind == Event::Kind::til) {
            const auto& til = model_.problem.tils[e.source];
            (til.negated ? s.dels : s.adds).push_back(til.atom);
            return s;
        }
        const GroundOp& op = ops_[e.source];
        if (e.kind == Event::Kind::action_start) {
            s.checks = &op.start_cond;
            s.adds = op.start_add;
            s.dels = op.start_del;
        } else {
            s.checks = &op.end_cond;
            s.adds = op.end_add;
            s.dels = op.end_del;
        }
        return s;
    }

    std::string describe(const Event& e) const {
        if (e.kind == Event::Kind::til) {
            const auto& til = model_.problem.tils[e.source];
            return "timed literal " + std::string(til.negated ? "(not " : "") + til.atom.to_string() +
                   (til.negated ? ")" : "");
        }
        return std::string(e.kind == Event::Kind::action_start ? "start of " : "end of ") +
               plan_.steps[e.source].action.signature();
    }

    std::optional<Failure> check_mutex(std::size_t h) const {
        std::vector<Event> events = happenings_[h].events;
        // Happenings closer than epsilon count as simultaneous.
        for (std::size_t k = h + 1; k < happenings_.size() && happenings_[k].time - happenings_[h].time < epsilon; ++k)
            events.insert(events.end(), happenings_[k].events.begin(), happenings_[k].events.end());
        std::vector<EventSets> sets;
        for (const auto& e : events)
            sets.push_back(sets_of(e));
        for (std::size_t i = 0; i < events.size(); ++i)
            for (std::size_t j = i + 1; j < events.size(); ++j) {
                if (events[i].kind != Event::Kind::til && events[j].kind != Event::Kind::til &&
                    events[i].source == events[j].source)
                    continue;
                if (auto lit = interference(sets[i], sets[j])) {
                    std::optional<std::size_t> step;
                    for (const Event* e : {&events[j], &events[i]})
                        if (e->kind != Event::Kind::til) {
                            step = e->source;
                            break;
                        }
                    return Failure{happenings_[h].time, FailureReason::mutex_violation, lit, step,
                                   describe(events[i]) + " interferes with " + describe(events[j]) + " on " +
                                       lit->to_string()};
                }
            }
        return std::nullopt;
    }

    void add_edge(const Atom& a, CausalNode consumer) {
        auto it = achiever_.find(a);
        CausalNode producer = it == achiever_.end() ? CausalNode{CausalNode::Kind::init, 0} : it->second;
        if (producer == consumer)
            return;
        edges_.insert({producer, consumer, a});
    }

    std::optional<Failure> apply(const Happening& hap) {
        state_.time = hap.time;
        std::vector<Atom> dels, adds;
        std::vector<std::pair<Atom, CausalNode>> new_causes;
        // Phase 1: TILs and action ends.
        for (const auto& e : hap.events) {
            if (e.kind == Event::Kind::action_start)
                continue;
            if (e.kind == Event::Kind::til) {
                const auto& til = model_.problem.tils[e.source];
                (til.negated ? dels : adds).push_back(til.atom);
                if (!til.negated)
                    new_causes.push_back({til.atom, {CausalNode::Kind::init, 0}});
                continue;
            }
            const GroundOp& op = ops_[e.source];
            for (const auto& c : op.end_cond) {
                if (!state_.holds(c))
                    return Failure{hap.time, FailureReason::end_condition, c, e.source,
                                   "end condition " + c.to_string() + " of " + op.action.signature() + " does not hold"};
                if (track_)
                    add_edge(c, {CausalNode::Kind::step, e.source});
            }
            dels.insert(dels.end(), op.end_del.begin(), op.end_del.end());
            adds.insert(adds.end(), op.end_add.begin(), op.end_add.end());
            for (const auto& a : op.end_add)
                new_causes.push_back({a, {CausalNode::Kind::step, e.source}});
        }
        commit(dels, adds, new_causes);
        // Phase 2: action starts.
        for (const auto& e : hap.events) {
            if (e.kind != Event::Kind::action_start)
                continue;
            const GroundOp& op = ops_[e.source];
            for (const auto& c : op.start_cond) {
                if (!state_.holds(c))
                    return Failure{hap.time, FailureReason::start_condition, c, e.source,
                                   "start condition " + c.to_string() + " of " + op.action.signature() +
                                       " does not hold"};
                if (track_)
                    add_edge(c, {CausalNode::Kind::step, e.source});
            }
            dels.insert(dels.end(), op.start_del.begin(), op.start_del.end());
            adds.insert(adds.end(), op.start_add.begin(), op.start_add.end());
            for (const auto& a : op.start_add)
                new_causes.push_back({a, {CausalNode::Kind::step, e.source}});
        }
        if (track_) {
            // Invariants starting now are supported by the pre-start state.
            for (const auto& e : hap.events)
                if (e.kind == Event::Kind::action_start)
                    for (const auto& c : ops_[e.source].over_all)
                        if (std::find(ops_[e.source].start_cond.begin(), ops_[e.source].start_cond.end(), c) ==
                            ops_[e.source].start_cond.end())
                            add_edge(c, {CausalNode::Kind::step, e.source});
        }
        commit(dels, adds, new_causes);
        // Over-all conditions of steps running after this happening.
        for (std::size_t i = 0; i < plan_.steps.size(); ++i) {
            const auto& s = plan_.steps[i];
            if (s.start > hap.time || s.end() <= hap.time)
                continue;
            for (const auto& c : ops_[i].over_all)
                if (!state_.holds(c))
                    return Failure{hap.time, FailureReason::over_all_condition, c, i,
                                   "over-all condition " + c.to_string() + " of " + s.action.signature() +
                                       " does not hold"};
        }
        return std::nullopt;
    }

    void commit(std::vector<Atom>& dels, std::vector<Atom>& adds, std::vector<std::pair<Atom, CausalNode>>& causes) {
        for (const auto& d : dels)
            state_.facts.erase(d);
        for (const auto& a : adds)
            state_.facts.insert(a);
        if (track_)
            for (const auto& [a, node] : causes)
                achiever_[a] = node;
        dels.clear();
        adds.clear();
        causes.clear();
    }

    const Model& model_;
    const TimedPlan& plan_;
    bool track_;
    std::vector<GroundOp> ops_;
    std::vector<Happening> happenings_;
    State state_;
    std::vector<TraceEntry> trace_;
    std::map<Atom, CausalNode> achiever_;
    std::set<CausalEdge> edges_;
};

} // namespace detail

/// Simulates the plan against the model. Model/plan mismatches (unknown
/// actions or objects) throw UsageError; everything else is reported.
inline ValidationReport validate(const Model& model, const TimedPlan& plan) {
    detail::Simulator sim(model, plan);
    ValidationReport report;
    if (auto f = sim.check_durations()) {
        report.failure = f;
        return report;
    }
    auto failure = sim.run();
    if (!failure)
        failure = sim.check_goal();
    report.trace = sim.trace();
    if (failure) {
        report.failure = failure;
        return report;
    }
    report.valid = true;
    report.cost = plan.cost();
    return report;
}

inline ValidationReport validate(const Domain& domain, const Problem& problem, const TimedPlan& plan) {
    return validate(Model{domain, problem}, plan);
}

struct StateAt {
    State state;
    /// Steps whose start has been applied but whose end has not.
    std::vector<std::size_t> in_flight;
};

/// State after every happening at or before `time` (strictly before when
/// `inclusive` is false).
inline StateAt state_at(const Model& model, const TimedPlan& plan, decimal time, bool inclusive) {
    if (time < decimal{})
        throw UsageError("state_at: negative time");
    detail::Simulator sim(model, plan);
    if (auto f = sim.run(time, inclusive))
        throw UsageError("plan is invalid before " + time.to_string() + ": " + f->detail);
    StateAt out{sim.state(), {}};
    out.state.time = time;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& s = plan.steps[i];
        bool started = inclusive ? s.start <= time : s.start < time;
        bool ended = inclusive ? s.end() <= time : s.end() < time;
        if (started && !ended)
            out.in_flight.push_back(i);
    }
    return out;
}

/// Latest-achiever causal links for every condition of every step and
/// every goal literal. Literals never re-achieved link to the init node.
inline CausalGraph causal_links(const Model& model, const TimedPlan& plan) {
    detail::Simulator sim(model, plan, true);
    auto failure = sim.check_durations();
    if (!failure)
        failure = sim.run();
    if (!failure)
        failure = sim.check_goal();
    if (failure)
        throw UsageError("causal_links requires a valid plan: " + failure->detail);
    sim.link_goal();
    return CausalGraph{plan.steps, sim.edges()};
}

} // namespace xaip
