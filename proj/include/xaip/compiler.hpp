#pragma once

#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/model.hpp"
#include "xaip/plan.hpp"
#include "xaip/validator.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace xaip {

enum class QuestionKind { forbid_action, force_action, replace, replace_in_state, order_before, order_after, time_window };

inline constexpr std::string_view question_kind_names[] = {
    "forbid_action", "force_action", "replace", "replace_in_state", "order_before", "order_after", "time_window",
};

inline std::string_view to_string(QuestionKind k) { return question_kind_names[static_cast<int>(k)]; }

inline std::optional<QuestionKind> parse_question_kind(std::string_view s) {
    for (std::size_t i = 0; i < std::size(question_kind_names); ++i)
        if (iequals(s, question_kind_names[i]))
            return static_cast<QuestionKind>(i);
    return std::nullopt;
}

struct TimeWindow {
    decimal lb;
    decimal ub;

    bool operator==(const TimeWindow&) const = default;
};

struct FormalQuestion {
    QuestionKind kind = QuestionKind::forbid_action;
    GroundAction action_a;
    std::optional<GroundAction> action_b;
    std::optional<std::size_t> occurrence_index;
    std::optional<TimeWindow> window;
    /// TimeWindow only: require the whole execution of A inside the window,
    /// not just its start.
    bool containment = false;

    bool operator==(const FormalQuestion&) const = default;

    /// One-line human-readable form, e.g. "force_action (unload_pallet Tom p2 sh1)".
    std::string summary() const {
        std::string s(to_string(kind));
        s += " " + action_a.signature();
        if (action_b)
            s += " " + action_b->signature();
        if (occurrence_index)
            s += " @" + std::to_string(*occurrence_index);
        if (window)
            s += " [" + window->lb.to_short_string() + ", " + window->ub.to_short_string() + ")";
        if (containment)
            s += " contained";
        return s;
    }
};

/// A hypothetical model: the original model revised by a chain of questions.
struct HModel {
    Model model;
    std::vector<FormalQuestion> provenance;
    /// Names of generated predicates and actions, and descriptions of
    /// generated timed literals, in creation order.
    std::vector<std::string> generated;
    /// Generated clone action name -> the original ground action it stands for.
    std::map<std::string, GroundAction> clones;
    /// Steps fixed before the HModel's time 0 (absolute times). Only
    /// in-state replacements create a prefix.
    std::vector<PlanStep> prefix;
    /// Absolute time represented by the HModel's time 0.
    decimal time_origin;
    /// Set when a suggested action cannot be applied in the projected state;
    /// planning such a model reports the message as unsolvable.
    std::optional<std::string> blocked;

    bool operator==(const HModel&) const = default;
};

inline HModel root_hmodel(Model m) {
    HModel h;
    h.model = std::move(m);
    return h;
}

struct ProjectionResult {
    State initial_state;
    std::vector<TimedInitialLiteral> tils;
    std::vector<PlanStep> prefix;
    decimal b_start;
    /// Empty when B is applicable; otherwise the user-facing reason.
    std::optional<std::string> inapplicable;
};

namespace detail {

inline Expr substitute_expr(const Expr& e, const Binding& b) {
    Expr out = e;
    if (e.kind == Expr::Kind::function)
        out.function = substitute(e.function, b);
    for (auto& op : out.operands)
        op = substitute_expr(op, b);
    return out;
}

inline std::vector<std::vector<std::string>> groundings(const Model& m, const std::vector<TypedName>& params) {
    std::vector<std::vector<std::string>> out{{}};
    for (const auto& p : params) {
        auto objs = m.objects_of_type(p.type);
        std::vector<std::vector<std::string>> next;
        for (const auto& prefix : out)
            for (const auto& o : objs) {
                next.push_back(prefix);
                next.back().push_back(o);
            }
        out = std::move(next);
    }
    return out;
}

inline DurativeAction& find_action_mut(Domain& d, std::string_view name) {
    for (auto& a : d.actions)
        if (iequals(a.name, name))
            return a;
    throw CompilationError("unknown action '" + std::string(name) + "'");
}

inline void remove_atom(std::vector<Atom>& v, const Atom& a) { v.erase(std::remove(v.begin(), v.end(), a), v.end()); }

class Compiler {
public:
    Compiler(const HModel& h, const FormalQuestion& q) : h_(h), q_(q), n_(h.provenance.size() + 1) {}

    HModel run(const TimedPlan& plan) {
        check_question();
        switch (q_.kind) {
        case QuestionKind::forbid_action: forbid(q_.action_a, {}); break;
        case QuestionKind::force_action: force(q_.action_a, "force"); break;
        case QuestionKind::replace:
            forbid(q_.action_a, {});
            force(*q_.action_b, "force");
            break;
        case QuestionKind::replace_in_state: replace_in_state(plan); break;
        case QuestionKind::order_before: order(*q_.action_b, q_.action_a); break;
        case QuestionKind::order_after: order(q_.action_a, *q_.action_b); break;
        case QuestionKind::time_window: time_window(); break;
        }
        h_.provenance.push_back(q_);
        return std::move(h_);
    }

private:
    std::string name(std::string_view stem) const { return std::string(reserved_prefix) + std::string(stem) + "_" + std::to_string(n_); }

    void check_action(const GroundAction& g, const char* role) const {
        if (has_reserved_prefix(g.name))
            throw CompilationError(std::string(role) + " must name an original action, not generated '" + g.name + "'");
        try {
            GroundAction again = ground_action(h_.model, g.name, g.args);
            if (!again.same_signature(g))
                throw CompilationError(std::string(role) + " " + g.signature() + " does not resolve in the model");
        } catch (const UsageError& e) {
            throw CompilationError(std::string(role) + ": " + e.what());
        }
    }

    void check_question() const {
        check_action(q_.action_a, "action_a");
        bool needs_b = q_.kind == QuestionKind::replace || q_.kind == QuestionKind::replace_in_state ||
                       q_.kind == QuestionKind::order_before || q_.kind == QuestionKind::order_after;
        if (needs_b && !q_.action_b)
            throw CompilationError(std::string(to_string(q_.kind)) + " requires action_b");
        if (q_.action_b)
            check_action(*q_.action_b, "action_b");
        if (q_.kind == QuestionKind::replace_in_state && !q_.occurrence_index)
            throw CompilationError("replace_in_state requires occurrence_index");
        if (q_.kind == QuestionKind::time_window) {
            if (!q_.window)
                throw CompilationError("time_window requires window");
            if (!(q_.window->lb < q_.window->ub))
                throw CompilationError("time window requires lb < ub, got [" + q_.window->lb.to_string() + ", " +
                                       q_.window->ub.to_string() + ")");
        }
        if ((q_.kind == QuestionKind::order_before || q_.kind == QuestionKind::order_after || q_.kind == QuestionKind::replace) &&
            q_.action_a.same_signature(*q_.action_b))
            throw CompilationError(std::string(to_string(q_.kind)) + " requires two different actions");
    }

    /// Disables the grounding `a` of its operator, and every clone standing
    /// for `a` except those in `spare`.
    void forbid(const GroundAction& a, const std::set<std::string>& spare) {
        Domain& d = h_.model.domain;
        DurativeAction& op = find_action_mut(d, a.name);
        std::string pred = std::string(reserved_prefix) + "enabled_" + op.name;
        Atom fact{pred, a.args};
        if (!d.find_predicate(pred)) {
            d.predicates.push_back({pred, op.parameters});
            Atom lifted{pred, {}};
            for (const auto& p : op.parameters)
                lifted.args.push_back(p.name);
            op.conditions.push_back({TimeSpec::at_start, lifted});
            op.conditions.push_back({TimeSpec::over_all, lifted});
            for (auto& args : groundings(h_.model, op.parameters)) {
                Atom g{pred, std::move(args)};
                if (g != fact)
                    h_.model.problem.init.push_back(std::move(g));
            }
            h_.generated.push_back(pred);
        } else {
            remove_atom(h_.model.problem.init, fact);
        }
        for (const auto& [clone, original] : h_.clones) {
            if (spare.count(clone) || !original.same_signature(a))
                continue;
            DurativeAction& c = find_action_mut(d, clone);
            TimedCondition cond{TimeSpec::at_start, fact};
            if (std::find(c.conditions.begin(), c.conditions.end(), cond) == c.conditions.end())
                c.conditions.push_back(cond);
        }
    }

    /// Adds a zero-parameter copy of `a`'s operator with `a`'s arguments
    /// substituted. The reference is invalidated by the next clone.
    DurativeAction& clone(const GroundAction& a, std::string_view role) {
        Domain& d = h_.model.domain;
        const DurativeAction* op = d.find_action(a.name);
        Binding b = bind(*op, a.args);
        DurativeAction c;
        c.name = std::string(reserved_prefix) + std::to_string(n_) + "_" + std::string(role) + "_" + op->name;
        c.duration = substitute_expr(op->duration, b);
        for (const auto& cond : op->conditions)
            c.conditions.push_back({cond.when, substitute(cond.atom, b)});
        for (const auto& eff : op->effects)
            c.effects.push_back({eff.when, eff.negated, substitute(eff.atom, b)});
        for (const auto& arg : a.args)
            promote_to_constant(arg);
        h_.clones[c.name] = GroundAction{op->name, a.args, a.duration};
        h_.generated.push_back(c.name);
        d.actions.push_back(std::move(c));
        return d.actions.back();
    }

    /// Clone bodies mention objects, which PDDL only allows for constants.
    void promote_to_constant(const std::string& obj) {
        auto& objects = h_.model.problem.objects;
        auto it = std::find_if(objects.begin(), objects.end(), [&](const TypedName& o) { return iequals(o.name, obj); });
        if (it == objects.end())
            return;
        h_.model.domain.constants.push_back(*it);
        objects.erase(it);
    }

    void add_predicate(const std::string& pred) {
        h_.model.domain.predicates.push_back({pred, {}});
        h_.generated.push_back(pred);
    }

    void force(const GroundAction& a, std::string_view role) {
        std::string pred = name("forced");
        add_predicate(pred);
        DurativeAction& c = clone(a, role);
        c.effects.push_back({TimeSpec::at_end, false, {pred, {}}});
        h_.model.problem.goal.push_back({pred, {}});
    }

    /// `first` must end before `second` starts.
    void order(const GroundAction& first, const GroundAction& second) {
        std::string pred = name("ordered");
        add_predicate(pred);
        std::set<std::string> fresh;
        DurativeAction& f = clone(first, "first");
        f.effects.push_back({TimeSpec::at_end, false, {pred, {}}});
        fresh.insert(f.name);
        DurativeAction& s = clone(second, "second");
        s.conditions.push_back({TimeSpec::at_start, {pred, {}}});
        fresh.insert(s.name);
        forbid(first, fresh);
        forbid(second, fresh);
    }

    void time_window() {
        std::string pred = name("in_window");
        add_predicate(pred);
        Atom fact{pred, {}};
        decimal lb = q_.window->lb - h_.time_origin;
        decimal ub = q_.window->ub - h_.time_origin;
        Problem& p = h_.model.problem;
        if (ub > decimal{}) {
            if (lb > decimal{}) {
                p.tils.push_back({lb, false, fact});
                h_.generated.push_back("(at " + lb.to_short_string() + " " + fact.to_string() + ")");
            } else {
                p.init.push_back(fact);
            }
            p.tils.push_back({ub, true, fact});
            h_.generated.push_back("(at " + ub.to_short_string() + " (not " + fact.to_string() + "))");
        }
        DurativeAction& c = clone(q_.action_a, "window");
        c.conditions.push_back({TimeSpec::at_start, fact});
        if (q_.containment) {
            c.conditions.push_back({TimeSpec::over_all, fact});
            c.conditions.push_back({TimeSpec::at_end, fact});
        }
        forbid(q_.action_a, {c.name});
    }

    void replace_in_state(const TimedPlan& plan);

    HModel h_;
    const FormalQuestion& q_;
    std::size_t n_;
};

} // namespace detail

/// Replaces `actionB` for the step at `i` and projects the rest of the plan
/// onto a new initial state whose time 0 is start(B). The plan and the
/// returned times are relative to the model's own time 0.
inline ProjectionResult project_replace(const Model& model, const TimedPlan& plan, std::size_t i, const GroundAction& b) {
    if (i >= plan.size())
        throw CompilationError("occurrence index " + std::to_string(i) + " is out of range for a plan of " +
                               std::to_string(plan.size()) + " steps");
    ProjectionResult r;
    r.b_start = plan.steps[i].start;
    TimedPlan before{{plan.steps.begin(), plan.steps.begin() + static_cast<long>(i)}};
    StateAt s = state_at(model, before, r.b_start, true);
    r.prefix = before.steps;
    GroundOp op = instantiate(model, b);
    State st = s.state;
    for (const auto& c : op.start_cond)
        if (!st.holds(c)) {
            r.inapplicable = "suggested action " + b.signature() + " inapplicable in state S at " +
                             r.b_start.to_string() + ": " + c.to_string() + " does not hold";
            break;
        }
    for (const auto& d : op.start_del)
        st.facts.erase(d);
    for (const auto& a : op.start_add)
        st.facts.insert(a);
    st.time = decimal{};
    r.initial_state = std::move(st);
    auto deliver = [&](decimal at, const std::vector<Atom>& dels, const std::vector<Atom>& adds) {
        for (const auto& d : dels)
            r.tils.push_back({at, true, d});
        for (const auto& a : adds)
            r.tils.push_back({at, false, a});
    };
    deliver(b.duration, op.end_del, op.end_add);
    for (std::size_t j : s.in_flight) {
        const PlanStep& step = before.steps[j];
        GroundOp jop = instantiate(model, step.action);
        deliver(step.start + step.duration - r.b_start, jop.end_del, jop.end_add);
    }
    for (const auto& til : model.problem.tils)
        if (til.time > r.b_start)
            r.tils.push_back({til.time - r.b_start, til.negated, til.atom});
    r.prefix.push_back({r.b_start, b, b.duration});
    return r;
}

inline void detail::Compiler::replace_in_state(const TimedPlan& plan) {
    std::size_t i = *q_.occurrence_index;
    std::size_t fixed = h_.prefix.size();
    if (i >= plan.size())
        throw CompilationError("occurrence index " + std::to_string(i) + " is out of range for a plan of " +
                               std::to_string(plan.size()) + " steps");
    if (i < fixed)
        throw CompilationError("occurrence index " + std::to_string(i) +
                               " lies in the prefix fixed by an earlier question");
    const PlanStep& target = plan.steps[i];
    GroundAction original = target.action;
    if (auto it = h_.clones.find(original.name); it != h_.clones.end())
        original = it->second;
    if (!original.same_signature(q_.action_a))
        throw CompilationError("occurrence not found: step " + std::to_string(i) + " is " + original.signature() +
                               ", not " + q_.action_a.signature());
    // Plan steps after the fixed prefix, on the HModel's own timeline.
    TimedPlan relative;
    for (std::size_t k = fixed; k < plan.size(); ++k) {
        PlanStep s = plan.steps[k];
        s.start = s.start - h_.time_origin;
        relative.steps.push_back(s);
    }
    ProjectionResult pr;
    try {
        pr = project_replace(h_.model, relative, i - fixed, *q_.action_b);
    } catch (const UsageError& e) {
        throw CompilationError(std::string("cannot project the plan: ") + e.what());
    }
    for (std::size_t k = 0; k < pr.prefix.size(); ++k) {
        PlanStep s = pr.prefix[k];
        s.start = s.start + h_.time_origin;
        h_.prefix.push_back(s);
    }
    h_.time_origin = h_.time_origin + pr.b_start;
    Problem& p = h_.model.problem;
    p.init.assign(pr.initial_state.facts.begin(), pr.initial_state.facts.end());
    p.tils = pr.tils;
    for (const auto& t : pr.tils)
        h_.generated.push_back("(at " + t.time.to_short_string() + " " + (t.negated ? "(not " : "") + t.atom.to_string() +
                               (t.negated ? ")" : "") + ")");
    h_.blocked = pr.inapplicable;
}

/// Compiles `q` onto `h`. `plan` is the plan the question is asked about
/// (absolute times, generated clone names allowed); only in-state
/// replacement reads it.
inline HModel compile(const HModel& h, const TimedPlan& plan, const FormalQuestion& q) {
    return detail::Compiler(h, q).run(plan);
}

inline HModel compile(const Model& model, const TimedPlan& plan, const FormalQuestion& q) {
    return compile(root_hmodel(model), plan, q);
}

/// Prefix steps at their absolute times followed by the suffix shifted by
/// `time_origin`; ties keep prefix steps first.
inline TimedPlan assemble_hplan(const std::vector<PlanStep>& prefix, const TimedPlan& suffix, decimal time_origin) {
    TimedPlan out{prefix};
    for (PlanStep s : suffix.steps) {
        s.start = s.start + time_origin;
        out.steps.push_back(std::move(s));
    }
    out.normalize();
    return out;
}

/// Renames generated clone steps back to the actions they stand for.
inline TimedPlan strip_back(const TimedPlan& plan, const std::map<std::string, GroundAction>& clones) {
    TimedPlan out = plan;
    for (auto& s : out.steps)
        if (auto it = clones.find(s.action.name); it != clones.end())
            s.action = it->second;
    return out;
}

namespace detail {

/// Removes step `k` from `steps` (indices into the original plan), then keeps
/// removing whichever step the validator blames until the plan is valid.
/// Returns the removed original indices, or nullopt when the goal is lost
/// or the failure cannot be pinned on a step.
inline std::optional<std::set<std::size_t>> cascade_remove(const Model& model, const TimedPlan& plan,
                                                           std::vector<std::size_t> kept, std::size_t k) {
    std::set<std::size_t> removed{k};
    kept.erase(std::remove(kept.begin(), kept.end(), k), kept.end());
    for (;;) {
        TimedPlan candidate;
        for (std::size_t idx : kept)
            candidate.steps.push_back(plan.steps[idx]);
        ValidationReport r = validate(model, candidate);
        if (r.valid)
            return removed;
        if (!r.failure || r.failure->reason == FailureReason::goal_unsatisfied || !r.failure->step)
            return std::nullopt;
        std::size_t blamed = kept[*r.failure->step];
        removed.insert(blamed);
        kept.erase(kept.begin() + static_cast<long>(*r.failure->step));
    }
}

} // namespace detail

/// Greedy redundancy detection. A step is redundant when it can be removed,
/// together with any steps that only served it (removed in cascade), leaving
/// a valid plan. With a focus, returns the indices of focus occurrences that
/// are redundant; otherwise removes redundant steps to a fixed point and
/// returns every removed index, sorted.
inline std::vector<std::size_t> find_redundant(const Model& model, const TimedPlan& plan,
                                               const std::optional<GroundAction>& focus = std::nullopt) {
    ValidationReport base = validate(model, plan);
    if (!base.valid)
        throw UsageError("find_redundant requires a valid plan: " + base.failure->detail);
    std::vector<std::size_t> all(plan.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    std::vector<std::size_t> out;
    if (focus) {
        for (std::size_t i = 0; i < plan.size(); ++i)
            if (plan.steps[i].action.same_signature(*focus) && detail::cascade_remove(model, plan, all, i))
                out.push_back(i);
        return out;
    }
    std::vector<std::size_t> kept = all;
    std::set<std::size_t> removed;
    for (bool progress = true; progress;) {
        progress = false;
        for (std::size_t k : kept) {
            if (auto r = detail::cascade_remove(model, plan, kept, k)) {
                for (std::size_t idx : *r) {
                    removed.insert(idx);
                    kept.erase(std::remove(kept.begin(), kept.end(), idx), kept.end());
                }
                progress = true;
                break;
            }
        }
    }
    return {removed.begin(), removed.end()};
}

} // namespace xaip
