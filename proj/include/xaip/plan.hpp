#pragma once

#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/model.hpp"
#include "xaip/sexpr.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace xaip {

struct GroundAction {
    std::string name;
    std::vector<std::string> args;
    decimal duration;

    bool operator==(const GroundAction&) const = default;

    /// `(name arg1 arg2)`; identifies the action regardless of timing.
    std::string signature() const { return Atom{name, args}.to_string(); }
    bool same_signature(const GroundAction& o) const { return iequals(signature(), o.signature()); }
};

struct PlanStep {
    decimal start;
    GroundAction action;
    decimal duration;

    bool operator==(const PlanStep&) const = default;

    decimal end() const { return start + duration; }
    std::string to_string() const {
        return start.to_string() + ": " + action.signature() + " [" + duration.to_string() + "]";
    }
};

struct TimedPlan {
    std::vector<PlanStep> steps;

    bool operator==(const TimedPlan&) const = default;

    /// Makespan: latest step end, 0 for the empty plan.
    decimal cost() const {
        decimal c;
        for (const auto& s : steps)
            c = std::max(c, s.end());
        return c;
    }

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }

    /// Stable sort by start time, keeping input order on ties.
    void normalize() {
        std::stable_sort(steps.begin(), steps.end(),
                         [](const PlanStep& a, const PlanStep& b) { return a.start < b.start; });
    }
};

/// A ground action with its conditions and effects split by time point.
struct GroundOp {
    GroundAction action;
    std::vector<Atom> start_cond;
    std::vector<Atom> over_all;
    std::vector<Atom> end_cond;
    std::vector<Atom> start_add;
    std::vector<Atom> start_del;
    std::vector<Atom> end_add;
    std::vector<Atom> end_del;
};

namespace detail {

using Binding = std::map<std::string, std::string>;

inline Atom substitute(const Atom& a, const Binding& b) {
    Atom out{a.predicate, {}};
    out.args.reserve(a.args.size());
    for (const auto& arg : a.args) {
        auto it = is_variable(arg) ? b.find(arg) : b.end();
        out.args.push_back(it == b.end() ? arg : it->second);
    }
    return out;
}

inline decimal eval(const Expr& e, const Problem& p, const Binding& b) {
    switch (e.kind) {
    case Expr::Kind::number: return e.value;
    case Expr::Kind::function: {
        Atom term = substitute(e.function, b);
        auto v = p.function_value(term);
        if (!v)
            throw UsageError("duration references uninitialized function " + term.to_string());
        return *v;
    }
    case Expr::Kind::neg: return -eval(e.operands[0], p, b);
    case Expr::Kind::add: return eval(e.operands[0], p, b) + eval(e.operands[1], p, b);
    case Expr::Kind::sub: return eval(e.operands[0], p, b) - eval(e.operands[1], p, b);
    case Expr::Kind::mul: return eval(e.operands[0], p, b) * eval(e.operands[1], p, b);
    case Expr::Kind::div: return eval(e.operands[0], p, b) / eval(e.operands[1], p, b);
    }
    return {};
}

inline Binding bind(const DurativeAction& schema, const std::vector<std::string>& args) {
    Binding b;
    for (std::size_t i = 0; i < schema.parameters.size(); ++i)
        b[schema.parameters[i].name] = args[i];
    return b;
}

} // namespace detail

/// Resolves `name` and `args` (case-insensitively) against the model,
/// checks arity and argument types and evaluates the duration.
inline GroundAction ground_action(const Model& model, std::string_view name, const std::vector<std::string>& args) {
    const DurativeAction* schema = model.domain.find_action(name);
    if (!schema)
        throw UsageError("unknown action '" + std::string(name) + "'");
    if (args.size() != schema->parameters.size())
        throw UsageError("arity mismatch for '" + schema->name + "': expected " +
                         std::to_string(schema->parameters.size()) + " arguments, got " + std::to_string(args.size()));
    GroundAction g{schema->name, {}, {}};
    for (std::size_t i = 0; i < args.size(); ++i) {
        auto obj = model.find_object(args[i]);
        if (!obj)
            throw UsageError("unknown object '" + args[i] + "'");
        const std::string& expected = schema->parameters[i].type;
        if (!model.domain.is_subtype(obj->type, expected))
            throw UsageError("type mismatch for argument " + std::to_string(i + 1) + " of '" + schema->name + "': '" +
                             obj->name + "' is a " + obj->type + ", expected " + expected);
        g.args.push_back(obj->name);
    }
    g.duration = detail::eval(schema->duration, model.problem, detail::bind(*schema, g.args));
    if (g.duration <= decimal{})
        throw UsageError("non-positive duration " + g.duration.to_string() + " for " + g.signature());
    return g;
}

/// Parses `(name arg ...)`.
inline GroundAction parse_action_literal(const Model& model, std::string_view text) {
    auto exprs = read_sexprs(text);
    if (exprs.size() != 1 || !exprs[0].is_list || exprs[0].size() == 0)
        throw UsageError("expected an action literal '(name arg ...)', got '" + std::string(text) + "'");
    std::vector<std::string> args;
    for (std::size_t i = 1; i < exprs[0].size(); ++i) {
        if (!exprs[0][i].is_atom())
            throw UsageError("nested list in action literal '" + std::string(text) + "'");
        args.push_back(exprs[0][i].token);
    }
    if (!exprs[0][0].is_atom())
        throw UsageError("expected action name in '" + std::string(text) + "'");
    return ground_action(model, exprs[0][0].token, args);
}

inline GroundOp instantiate(const Model& model, const GroundAction& g) {
    const DurativeAction* schema = model.domain.find_action(g.name);
    if (!schema)
        throw UsageError("unknown action '" + g.name + "'");
    auto b = detail::bind(*schema, g.args);
    GroundOp op;
    op.action = g;
    for (const auto& c : schema->conditions) {
        Atom a = detail::substitute(c.atom, b);
        switch (c.when) {
        case TimeSpec::at_start: op.start_cond.push_back(std::move(a)); break;
        case TimeSpec::over_all: op.over_all.push_back(std::move(a)); break;
        case TimeSpec::at_end: op.end_cond.push_back(std::move(a)); break;
        }
    }
    for (const auto& e : schema->effects) {
        Atom a = detail::substitute(e.atom, b);
        bool start = e.when == TimeSpec::at_start;
        auto& target = start ? (e.negated ? op.start_del : op.start_add) : (e.negated ? op.end_del : op.end_add);
        target.push_back(std::move(a));
    }
    return op;
}

namespace detail {

struct PlanLine {
    decimal start;
    std::string literal;
    std::optional<decimal> duration;
};

/// Splits `<time>: (<name> <args>) [<duration>]`; nullopt when the line does
/// not have that shape.
inline std::optional<PlanLine> split_plan_line(std::string_view line) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
            s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
            s.remove_suffix(1);
        return s;
    };
    auto colon = line.find(':');
    if (colon == std::string_view::npos)
        return std::nullopt;
    auto start = decimal::parse(trim(line.substr(0, colon)));
    if (!start)
        return std::nullopt;
    std::string_view rest = trim(line.substr(colon + 1));
    if (rest.empty() || rest.front() != '(')
        return std::nullopt;
    auto close = rest.find(')');
    if (close == std::string_view::npos)
        return std::nullopt;
    PlanLine out{*start, std::string(rest.substr(0, close + 1)), std::nullopt};
    rest = trim(rest.substr(close + 1));
    if (!rest.empty()) {
        if (rest.front() != '[' || rest.back() != ']')
            return std::nullopt;
        auto d = decimal::parse(trim(rest.substr(1, rest.size() - 2)));
        if (!d)
            return std::nullopt;
        out.duration = *d;
    }
    return out;
}

inline std::string_view strip_comment(std::string_view line) {
    auto c = line.find(';');
    return c == std::string_view::npos ? line : line.substr(0, c);
}

inline bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

inline PlanStep make_step(const Model& model, const PlanLine& pl) {
    GroundAction g = parse_action_literal(model, pl.literal);
    if (pl.start < decimal{})
        throw UsageError("negative start time " + pl.start.to_string());
    return PlanStep{pl.start, g, pl.duration.value_or(g.duration)};
}

} // namespace detail

/// Parses a plan file. Every non-blank, non-comment line must be a plan
/// line. Steps are sorted by start time with ties kept in file order.
inline TimedPlan parse_plan(std::string_view text, const Model& model) {
    TimedPlan plan;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = detail::strip_comment(line);
        if (detail::blank(body))
            continue;
        auto pl = detail::split_plan_line(body);
        if (!pl)
            throw UsageError("plan line " + std::to_string(lineno) + ": malformed, expected '<time>: (<name> <args>) [<duration>]'");
        try {
            plan.steps.push_back(detail::make_step(model, *pl));
        } catch (const UsageError& e) {
            throw UsageError("plan line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    plan.normalize();
    return plan;
}

inline TimedPlan parse_plan(std::string_view text, const Domain& domain, const Problem& problem) {
    return parse_plan(text, Model{domain, problem});
}

inline std::string print_plan(const TimedPlan& plan) {
    std::string out;
    for (const auto& s : plan.steps)
        out += s.to_string() + "\n";
    return out;
}

} // namespace xaip
