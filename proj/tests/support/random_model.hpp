#pragma once

#include "xaip/compiler.hpp"
#include "xaip/validator.hpp"

#include <random>

namespace xaip::test {

/// Small random models over a few types, predicates and objects, with
/// durations drawn from numbers and one function. Goals are left empty;
/// `random_case` fills them from a random walk.
class ModelGenerator {
public:
    explicit ModelGenerator(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
    }

    Model model() {
        Model m;
        Domain& d = m.domain;
        d.name = "rdom" + std::to_string(uniform(0, 999));
        d.requirements = {":strips", ":typing", ":durative-actions"};
        bool fluents = chance(0.7), tils = chance(0.5);
        if (fluents)
            d.requirements.push_back(":fluents");
        if (tils)
            d.requirements.push_back(":timed-initial-literals");
        int ntypes = uniform(1, 3);
        std::vector<std::string> types{"object"};
        for (int i = 0; i < ntypes; ++i) {
            std::string t = "t" + std::to_string(i);
            d.types.push_back({t, i > 0 && chance(0.3) ? "t0" : "object"});
            types.push_back(t);
        }
        std::vector<std::string> leaf(types.begin() + 1, types.end());
        int npred = uniform(2, 4);
        for (int i = 0; i < npred; ++i) {
            PredicateSignature p{"p" + std::to_string(i), {}};
            int arity = uniform(0, 2);
            for (int a = 0; a < arity; ++a)
                p.params.push_back({"?x" + std::to_string(a), pick(types)});
            d.predicates.push_back(p);
        }
        if (fluents)
            d.functions.push_back({"f0", {{"?y", pick(leaf)}}});
        if (chance(0.3))
            d.constants.push_back({"k0", pick(leaf)});

        int nobj = uniform(2, 4);
        Problem& pr = m.problem;
        pr.name = "rprob";
        pr.domain_name = d.name;
        for (int i = 0; i < nobj; ++i)
            pr.objects.push_back({"o" + std::to_string(i), pick(leaf)});

        int nact = uniform(2, 4);
        for (int i = 0; i < nact; ++i)
            d.actions.push_back(action(m, "a" + std::to_string(i), types));

        for (const auto& p : d.predicates)
            for (const auto& args : detail::groundings(m, p.params))
                if (chance(0.35))
                    pr.init.push_back({p.name, args});
        for (const auto& f : d.functions)
            for (const auto& args : detail::groundings(m, f.params))
                pr.function_init.push_back({{f.name, args}, pick(std::vector<decimal>{"0.5"_dec, "1"_dec, "2"_dec, "2.25"_dec})});
        if (tils) {
            int n = uniform(1, 2);
            for (int i = 0; i < n; ++i) {
                Atom a = random_ground_atom(m);
                if (!a.predicate.empty())
                    pr.tils.push_back({pick(std::vector<decimal>{"1.5"_dec, "2"_dec, "3.25"_dec, "6"_dec}), chance(0.5), a});
            }
        }
        Atom goal = random_ground_atom(m);
        if (!goal.predicate.empty())
            pr.goal.push_back(goal);
        pr.minimize_total_time = chance(0.5);
        return m;
    }

    Atom random_ground_atom(const Model& m) {
        const auto& p = pick(m.domain.predicates);
        auto g = detail::groundings(m, p.params);
        if (g.empty())
            return {};
        return {p.name, pick(g)};
    }

private:
    DurativeAction action(const Model& m, const std::string& name, const std::vector<std::string>& types) {
        const Domain& d = m.domain;
        DurativeAction a;
        a.name = name;
        int arity = uniform(0, 2);
        for (int i = 0; i < arity; ++i)
            a.parameters.push_back({"?v" + std::to_string(i), pick(types)});
        // Terms usable as an argument of declared type `t`.
        auto term_for = [&](const std::string& t) -> std::optional<std::string> {
            std::vector<std::string> options;
            for (const auto& p : a.parameters)
                if (d.is_subtype(p.type, t))
                    options.push_back(p.name);
            for (const auto& c : d.constants)
                if (d.is_subtype(c.type, t))
                    options.push_back(c.name);
            if (options.empty())
                return std::nullopt;
            return pick(options);
        };
        auto atom = [&]() -> std::optional<Atom> {
            const auto& p = pick(d.predicates);
            Atom out{p.name, {}};
            for (const auto& param : p.params) {
                auto t = term_for(param.type);
                if (!t)
                    return std::nullopt;
                out.args.push_back(*t);
            }
            return out;
        };
        a.duration = Expr::number(pick(std::vector<decimal>{"1"_dec, "1.5"_dec, "2"_dec, "0.75"_dec}));
        if (!d.functions.empty() && chance(0.5)) {
            if (auto t = term_for(d.functions[0].params[0].type)) {
                a.duration = Expr::term({"f0", {*t}});
                if (chance(0.4)) {
                    Expr sum;
                    sum.kind = Expr::Kind::add;
                    sum.operands = {a.duration, Expr::number("1"_dec)};
                    a.duration = sum;
                }
            }
        }
        int nc = uniform(0, 3);
        for (int i = 0; i < nc; ++i)
            if (auto x = atom())
                a.conditions.push_back({pick(std::vector<TimeSpec>{TimeSpec::at_start, TimeSpec::at_start, TimeSpec::over_all,
                                                                   TimeSpec::at_end}),
                                        *x});
        int ne = uniform(1, 3);
        for (int i = 0; i < ne; ++i)
            if (auto x = atom())
                a.effects.push_back({chance(0.5) ? TimeSpec::at_start : TimeSpec::at_end, chance(0.4), *x});
        for (int i = 0; i < 10 && a.effects.empty(); ++i)
            if (auto x = atom())
                a.effects.push_back({TimeSpec::at_end, false, *x});
        return a;
    }

    std::mt19937_64 rng_;
};

/// Every type-correct grounding whose duration evaluates.
inline std::vector<GroundAction> all_ground_actions(const Model& m) {
    std::vector<GroundAction> out;
    for (const auto& a : m.domain.actions)
        for (const auto& args : detail::groundings(m, a.parameters)) {
            try {
                out.push_back(ground_action(m, a.name, args));
            } catch (const UsageError&) {
            }
        }
    return out;
}

struct RandomCase {
    Model model;
    TimedPlan plan;
    std::vector<GroundAction> ground;
};

/// A random model with a valid plan of 2..6 steps, some of them concurrent,
/// whose goal is drawn from the plan's final state. Returns nullopt when the
/// drawn model admits no such plan.
inline std::optional<RandomCase> try_random_case(ModelGenerator& gen) {
    RandomCase c;
    c.model = gen.model();
    c.ground = all_ground_actions(c.model);
    if (c.ground.empty())
        return std::nullopt;
    Model open = c.model; // no goal while walking
    int target = gen.uniform(2, 6);
    for (int attempt = 0; attempt < 40 && static_cast<int>(c.plan.size()) < target; ++attempt) {
        const GroundAction& g = gen.pick(c.ground);
        decimal start;
        if (!c.plan.empty()) {
            const PlanStep& last = c.plan.steps.back();
            start = gen.chance(0.35) ? last.start + epsilon * decimal::from_int(gen.uniform(1, 3)) : c.plan.cost() + epsilon;
        }
        TimedPlan next = c.plan;
        next.steps.push_back({start, g, g.duration});
        next.normalize();
        if (validate(open, next).valid)
            c.plan = std::move(next);
    }
    if (c.plan.size() < 2)
        return std::nullopt;
    ValidationReport r = validate(open, c.plan);
    const Facts& final_facts = r.trace.back().state.facts;
    Facts init(c.model.problem.init.begin(), c.model.problem.init.end());
    std::vector<Atom> achieved;
    for (const auto& f : final_facts)
        if (!init.count(f))
            achieved.push_back(f);
    if (achieved.empty())
        return std::nullopt;
    int ngoal = gen.uniform(1, std::min<int>(2, static_cast<int>(achieved.size())));
    std::shuffle(achieved.begin(), achieved.end(), gen.rng());
    c.model.problem.goal.assign(achieved.begin(), achieved.begin() + ngoal);
    if (!validate(c.model, c.plan).valid)
        return std::nullopt;
    return c;
}

inline RandomCase random_case(std::uint64_t seed) {
    ModelGenerator gen(seed);
    for (;;)
        if (auto c = try_random_case(gen))
            return *c;
}

/// Renames steps whose signature is `original` to the clone standing for
/// it whose name contains `role`; only the first match when `first_only`.
inline TimedPlan use_clone(const HModel& h, TimedPlan p, const std::string& original, std::string_view role = "",
                           bool first_only = false) {
    for (const auto& [name, g] : h.clones) {
        if (g.signature() != original || name.find(role) == std::string::npos)
            continue;
        for (auto& s : p.steps)
            if (s.action.signature() == original) {
                s.action = GroundAction{name, {}, s.action.duration};
                if (first_only)
                    return p;
            }
    }
    return p;
}

} // namespace xaip::test
