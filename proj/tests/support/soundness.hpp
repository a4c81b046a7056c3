#pragma once

#include "random_model.hpp"
#include "xaip/planner.hpp"

#include <sstream>

namespace xaip::test {

/// Outcome of the randomized compilation-soundness checks for one kind.
struct SoundnessStats {
    int cases = 0;
    /// Cases in which at least one candidate plan was valid for the HModel,
    /// i.e. in which the soundness property was actually exercised.
    int exercised = 0;
    /// HModel-valid plans rejected by validation against the original model
    /// (in-state replacement only; see `Checker::check`).
    int gated = 0;
    std::vector<std::string> violations;
};

namespace soundness {

inline PlannerConfig small_planner() {
    PlannerConfig cfg;
    cfg.builtin.max_expanded_states = 5000;
    cfg.timeout = 2;
    return cfg;
}

inline bool contains(const TimedPlan& p, const std::string& sig) {
    return std::any_of(p.steps.begin(), p.steps.end(), [&](const PlanStep& s) { return s.action.signature() == sig; });
}

inline bool has_clone(const TimedPlan& p, const HModel& h) {
    return std::any_of(p.steps.begin(), p.steps.end(), [&](const PlanStep& s) { return h.clones.count(s.action.name) > 0; });
}

/// Checks one kind on one random case. `property` judges the stripped,
/// assembled plan; `extra` adds kind-specific mandatory checks.
class Checker {
public:
    Checker(const RandomCase& c, std::uint64_t seed, SoundnessStats& st) : c_(c), seed_(seed), st_(st) {}

    void fail(const std::string& what) {
        std::ostringstream os;
        os << "seed " << seed_ << ": " << what;
        st_.violations.push_back(os.str());
    }

    void expect(bool ok, const std::string& what) {
        if (!ok)
            fail(what);
    }

    /// Candidates are checked only when valid for the HModel; every such
    /// candidate must strip back to an original-valid plan that satisfies
    /// `property`. Returns whether any candidate was valid.
    /// With `gated`, stripped HPlans that fail the original model count as
    /// rejected by the service's validation gate rather than as violations.
    template <class Property>
    bool check(const HModel& h, std::vector<TimedPlan> candidates, Property property, bool gated = false) {
        PlanningOutcome out = plan(h, small_planner());
        if (out.status == PlanningStatus::plan_found)
            candidates.push_back(*out.plan);
        bool any = false;
        for (const auto& cand : candidates) {
            if (!validate(h.model, cand).valid)
                continue;
            any = true;
            TimedPlan full = strip_back(assemble_hplan(h.prefix, cand, h.time_origin), h.clones);
            ValidationReport r = validate(c_.model, full);
            if (!r.valid && gated) {
                ++st_.gated;
                continue;
            }
            if (!r.valid) {
                fail("stripped HPlan invalid in the original model: " + r.failure->detail + "\n" + print_plan(full));
                continue;
            }
            if (auto why = property(cand, full))
                fail(*why + "\n" + print_plan(full));
        }
        return any;
    }

private:
    const RandomCase& c_;
    std::uint64_t seed_;
    SoundnessStats& st_;
};

inline FormalQuestion question(QuestionKind k, const GroundAction& a, std::optional<GroundAction> b = std::nullopt) {
    return {k, a, std::move(b), std::nullopt, std::nullopt, false};
}

using Result = std::optional<std::string>;

inline bool run_forbid(const RandomCase& c, ModelGenerator& gen, Checker& chk) {
    const GroundAction a = gen.pick(c.plan.steps).action;
    const std::string sig = a.signature();
    HModel h = compile(c.model, c.plan, question(QuestionKind::forbid_action, a));
    chk.expect(!validate(h.model, c.plan).valid, "plan containing the forbidden action is valid for the HModel");
    // An action the plan does not use leaves the plan valid.
    std::vector<GroundAction> unused;
    for (const auto& g : c.ground)
        if (!contains(c.plan, g.signature()))
            unused.push_back(g);
    if (!unused.empty()) {
        HModel h2 = compile(c.model, c.plan, question(QuestionKind::forbid_action, gen.pick(unused)));
        chk.expect(validate(h2.model, c.plan).valid, "forbidding an unused action invalidated the plan");
    }
    return chk.check(h, {c.plan}, [&](const TimedPlan&, const TimedPlan& full) -> Result {
        if (contains(full, sig))
            return "forbidden action " + sig + " present";
        return std::nullopt;
    });
}

inline bool run_force(const RandomCase& c, ModelGenerator& gen, Checker& chk) {
    const GroundAction a = gen.chance(0.6) ? gen.pick(c.plan.steps).action : gen.pick(c.ground);
    const std::string sig = a.signature();
    HModel h = compile(c.model, c.plan, question(QuestionKind::force_action, a));
    chk.expect(!validate(h.model, c.plan).valid, "plan without the forced clone is valid for the HModel");
    std::vector<TimedPlan> cands;
    if (contains(c.plan, sig)) {
        TimedPlan mapped = use_clone(h, c.plan, sig, "force", true);
        chk.expect(validate(h.model, mapped).valid, "plan using the forced clone is invalid for the HModel");
        chk.expect(strip_back(mapped, h.clones) == c.plan, "strip-back does not restore the plan");
        cands.push_back(mapped);
    }
    return chk.check(h, cands, [&](const TimedPlan& cand, const TimedPlan& full) -> Result {
        if (!has_clone(cand, h) || !contains(full, sig))
            return "forced action " + sig + " missing";
        return std::nullopt;
    });
}

inline bool run_replace(const RandomCase& c, ModelGenerator& gen, Checker& chk) {
    const GroundAction a = gen.pick(c.plan.steps).action;
    GroundAction b = gen.pick(c.ground);
    if (b.signature() == a.signature())
        return false;
    HModel h = compile(c.model, c.plan, question(QuestionKind::replace, a, b));
    chk.expect(!validate(h.model, c.plan).valid, "plan containing the replaced action is valid for the HModel");
    return chk.check(h, {}, [&](const TimedPlan&, const TimedPlan& full) -> Result {
        if (contains(full, a.signature()))
            return "replaced action " + a.signature() + " present";
        if (!contains(full, b.signature()))
            return "replacement " + b.signature() + " missing";
        return std::nullopt;
    });
}

inline bool run_replace_in_state(const RandomCase& c, ModelGenerator& gen, Checker& chk) {
    std::size_t i = static_cast<std::size_t>(gen.uniform(0, static_cast<int>(c.plan.size()) - 1));
    const PlanStep& at = c.plan.steps[i];
    // Prefer a replacement that is applicable in the projected state.
    GroundAction b = gen.pick(c.ground);
    for (int t = 0; t < 20; ++t) {
        GroundAction cand = gen.pick(c.ground);
        if (cand.signature() == at.action.signature())
            continue;
        b = cand;
        if (!project_replace(c.model, c.plan, i, b).inapplicable)
            break;
    }
    if (b.signature() == at.action.signature())
        return false;
    ProjectionResult pr = project_replace(c.model, c.plan, i, b);
    // Projection formula: in-flight end effects become TILs at end - start(B).
    for (std::size_t j = 0; j < i; ++j) {
        const PlanStep& s = c.plan.steps[j];
        if (s.end() <= at.start)
            continue;
        for (const auto& add : instantiate(c.model, s.action).end_add) {
            TimedInitialLiteral til{s.end() - at.start, false, add};
            chk.expect(std::find(pr.tils.begin(), pr.tils.end(), til) != pr.tils.end(),
                       "missing projected TIL for " + add.to_string());
        }
    }
    FormalQuestion q{QuestionKind::replace_in_state, at.action, b, i, std::nullopt, false};
    HModel h = compile(c.model, c.plan, q);
    chk.expect(h.blocked.has_value() == pr.inapplicable.has_value(), "blocked flag disagrees with the projection");
    if (h.blocked) {
        chk.expect(plan(h, small_planner()).status == PlanningStatus::unsolvable, "blocked HModel not unsolvable");
        return false;
    }
    return chk.check(h, {}, [&](const TimedPlan&, const TimedPlan& full) -> Result {
        if (full.size() <= i)
            return "assembled plan shorter than the prefix";
        for (std::size_t j = 0; j < i; ++j)
            if (!(full.steps[j] == c.plan.steps[j]))
                return "prefix step " + std::to_string(j) + " changed";
        if (!(full.steps[i] == PlanStep{at.start, b, b.duration}))
            return "step " + std::to_string(i) + " is not the replacement at start(A)";
        return std::nullopt;
    }, true);
}

/// `first` must end before every `second` starts.
inline Result ordered(const TimedPlan& full, const std::string& first, const std::string& second) {
    for (const auto& s : full.steps) {
        if (s.action.signature() != second)
            continue;
        bool ok = std::any_of(full.steps.begin(), full.steps.end(), [&](const PlanStep& f) {
            return f.action.signature() == first && f.end() <= s.start;
        });
        if (!ok)
            return second + " at " + s.start.to_string() + " not preceded by a finished " + first;
    }
    return std::nullopt;
}

inline bool run_order(const RandomCase& c, ModelGenerator& gen, Checker& chk, bool before) {
    GroundAction a = gen.pick(c.plan.steps).action;
    GroundAction b = gen.pick(c.plan.steps).action;
    if (a.signature() == b.signature())
        b = gen.pick(c.ground);
    if (a.signature() == b.signature())
        return false;
    QuestionKind k = before ? QuestionKind::order_before : QuestionKind::order_after;
    HModel h = compile(c.model, c.plan, question(k, a, b));
    chk.expect(!validate(h.model, c.plan).valid, "plan using unconstrained originals is valid for the HModel");
    // order_before(A, B): B finishes before A starts. order_after(A, B): A
    // finishes before B starts.
    const std::string first = before ? b.signature() : a.signature();
    const std::string second = before ? a.signature() : b.signature();
    TimedPlan mapped = use_clone(h, use_clone(h, c.plan, first, "first"), second, "second");
    return chk.check(h, {mapped}, [&](const TimedPlan&, const TimedPlan& full) { return ordered(full, first, second); });
}

inline bool run_time_window(const RandomCase& c, ModelGenerator& gen, Checker& chk) {
    const PlanStep& step = gen.pick(c.plan.steps);
    const std::string sig = step.action.signature();
    std::vector<decimal> points{decimal{}, step.start, step.start + epsilon, step.end(), step.end() + epsilon,
                                step.start + "0.5"_dec, step.start - "0.5"_dec, "1"_dec, "3"_dec};
    decimal lb = gen.pick(points), ub = gen.pick(points);
    if (lb < decimal{})
        lb = decimal{};
    if (!(lb < ub))
        return false;
    FormalQuestion q = question(QuestionKind::time_window, step.action);
    q.window = TimeWindow{lb, ub};
    q.containment = gen.chance(0.4);
    HModel h = compile(c.model, c.plan, q);
    auto inside = [&](const PlanStep& s) {
        return lb <= s.start && s.start < ub && (!q.containment || s.end() <= ub);
    };
    TimedPlan mapped = use_clone(h, c.plan, sig, "window");
    bool expected = true, boundary = false;
    for (const auto& s : c.plan.steps)
        if (s.action.signature() == sig) {
            expected = expected && inside(s);
            boundary = boundary || (q.containment && s.end() == ub);
        }
    if (!boundary)
        chk.expect(validate(h.model, mapped).valid == expected, "window membership and HModel validity disagree");
    return chk.check(h, {mapped}, [&](const TimedPlan&, const TimedPlan& full) -> Result {
        for (const auto& s : full.steps)
            if (s.action.signature() == sig && !inside(s))
                return sig + " at " + s.start.to_string() + " outside [" + lb.to_string() + ", " + ub.to_string() + ")";
        return std::nullopt;
    });
}

} // namespace soundness

/// Runs `n` randomized cases of kind `k`; seeds are derived from the kind.
inline SoundnessStats run_soundness(QuestionKind k, int n) {
    SoundnessStats st;
    for (int i = 0; i < n; ++i) {
        std::uint64_t seed = 100000 * (static_cast<std::uint64_t>(k) + 1) + static_cast<std::uint64_t>(i);
        RandomCase c = random_case(seed);
        ModelGenerator gen(seed ^ 0x9e3779b97f4a7c15ULL);
        soundness::Checker chk(c, seed, st);
        ++st.cases;
        bool exercised = false;
        try {
            switch (k) {
            case QuestionKind::forbid_action: exercised = soundness::run_forbid(c, gen, chk); break;
            case QuestionKind::force_action: exercised = soundness::run_force(c, gen, chk); break;
            case QuestionKind::replace: exercised = soundness::run_replace(c, gen, chk); break;
            case QuestionKind::replace_in_state: exercised = soundness::run_replace_in_state(c, gen, chk); break;
            case QuestionKind::order_before: exercised = soundness::run_order(c, gen, chk, true); break;
            case QuestionKind::order_after: exercised = soundness::run_order(c, gen, chk, false); break;
            case QuestionKind::time_window: exercised = soundness::run_time_window(c, gen, chk); break;
            }
        } catch (const std::exception& e) {
            chk.fail(std::string("exception: ") + e.what());
        }
        st.exercised += exercised;
    }
    return st;
}

} // namespace xaip::test
