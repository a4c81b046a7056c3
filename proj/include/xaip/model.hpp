#pragma once

#include "xaip/decimal.hpp"
#include "xaip/error.hpp"

#include <algorithm>
#include <cctype>
#include <compare>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace xaip {

inline constexpr std::string_view reserved_prefix = "xaip__";

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

inline bool has_reserved_prefix(std::string_view name) {
    return name.size() >= reserved_prefix.size() && iequals(name.substr(0, reserved_prefix.size()), reserved_prefix);
}

inline bool is_variable(std::string_view term) { return !term.empty() && term[0] == '?'; }

struct TypedName {
    std::string name;
    std::string type = "object";

    auto operator<=>(const TypedName&) const = default;
};

struct TypeDecl {
    std::string name;
    std::string parent = "object";

    auto operator<=>(const TypeDecl&) const = default;
};

/// Predicate or function term. Arguments are constants, or `?variables`
/// inside action schemas.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Atom&) const = default;

    std::string to_string() const {
        std::string s = "(" + predicate;
        for (const auto& a : args)
            s += " " + a;
        return s + ")";
    }

    friend std::ostream& operator<<(std::ostream& os, const Atom& a) { return os << a.to_string(); }
};

struct PredicateSignature {
    std::string name;
    std::vector<TypedName> params;

    auto operator<=>(const PredicateSignature&) const = default;
};

using FunctionSignature = PredicateSignature;

enum class TimeSpec { at_start, over_all, at_end };

inline std::string_view to_string(TimeSpec t) {
    switch (t) {
    case TimeSpec::at_start: return "at start";
    case TimeSpec::over_all: return "over all";
    case TimeSpec::at_end: return "at end";
    }
    return "";
}

struct TimedCondition {
    TimeSpec when = TimeSpec::at_start;
    Atom atom;

    auto operator<=>(const TimedCondition&) const = default;
};

struct TimedEffect {
    TimeSpec when = TimeSpec::at_start;
    bool negated = false;
    Atom atom;

    auto operator<=>(const TimedEffect&) const = default;
};

/// Duration expression: numbers, function terms and + - * / (binary) or
/// unary minus.
struct Expr {
    enum class Kind { number, function, add, sub, mul, div, neg };

    Kind kind = Kind::number;
    decimal value;
    Atom function;
    std::vector<Expr> operands;

    static Expr number(decimal v) {
        Expr e;
        e.value = v;
        return e;
    }
    static Expr term(Atom fn) {
        Expr e;
        e.kind = Kind::function;
        e.function = std::move(fn);
        return e;
    }

    bool operator==(const Expr&) const = default;
};

struct DurativeAction {
    std::string name;
    std::vector<TypedName> parameters;
    Expr duration;
    std::vector<TimedCondition> conditions;
    std::vector<TimedEffect> effects;

    bool operator==(const DurativeAction&) const = default;
};

struct Domain {
    std::string name;
    std::vector<std::string> requirements;
    std::vector<TypeDecl> types;
    std::vector<TypedName> constants;
    std::vector<PredicateSignature> predicates;
    std::vector<FunctionSignature> functions;
    std::vector<DurativeAction> actions;

    bool operator==(const Domain&) const = default;

    const DurativeAction* find_action(std::string_view n) const { return find_named(actions, n); }
    const PredicateSignature* find_predicate(std::string_view n) const { return find_named(predicates, n); }
    const FunctionSignature* find_function(std::string_view n) const { return find_named(functions, n); }

    /// Declared explicitly, as the parent of a declared type, or `object`.
    std::optional<std::string> resolve_type(std::string_view t) const {
        if (iequals(t, "object"))
            return std::string("object");
        for (const auto& d : types) {
            if (iequals(d.name, t))
                return d.name;
            if (iequals(d.parent, t))
                return d.parent;
        }
        return std::nullopt;
    }

    bool is_subtype(std::string_view type, std::string_view ancestor) const {
        std::string current(type);
        for (int guard = 0; guard < 256; ++guard) {
            if (iequals(current, ancestor) || iequals(ancestor, "object"))
                return true;
            auto it = std::find_if(types.begin(), types.end(), [&](const TypeDecl& d) { return iequals(d.name, current); });
            if (it == types.end())
                return false;
            current = it->parent;
        }
        return false;
    }

private:
    template <class T>
    static const T* find_named(const std::vector<T>& v, std::string_view n) {
        auto it = std::find_if(v.begin(), v.end(), [&](const T& x) { return iequals(x.name, n); });
        return it == v.end() ? nullptr : &*it;
    }
};

struct FunctionValue {
    Atom term;
    decimal value;

    auto operator<=>(const FunctionValue&) const = default;
};

/// A fact scheduled to become true (or false when `negated`) at `time` > 0.
struct TimedInitialLiteral {
    decimal time;
    bool negated = false;
    Atom atom;

    auto operator<=>(const TimedInitialLiteral&) const = default;
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<FunctionValue> function_init;
    std::vector<TimedInitialLiteral> tils;
    std::vector<Atom> goal;
    bool minimize_total_time = false;

    bool operator==(const Problem&) const = default;

    std::optional<decimal> function_value(const Atom& term) const {
        for (const auto& f : function_init)
            if (f.term == term)
                return f.value;
        return std::nullopt;
    }
};

struct Model {
    Domain domain;
    Problem problem;

    bool operator==(const Model&) const = default;

    /// Domain constants and problem objects, in declaration order.
    std::vector<TypedName> all_objects() const {
        std::vector<TypedName> out = domain.constants;
        out.insert(out.end(), problem.objects.begin(), problem.objects.end());
        return out;
    }

    /// Case-insensitive lookup returning the declared spelling and type.
    std::optional<TypedName> find_object(std::string_view name) const {
        for (const auto* list : {&domain.constants, &problem.objects})
            for (const auto& o : *list)
                if (iequals(o.name, name))
                    return o;
        return std::nullopt;
    }

    std::vector<std::string> objects_of_type(std::string_view type) const {
        std::vector<std::string> out;
        for (const auto* list : {&domain.constants, &problem.objects})
            for (const auto& o : *list)
                if (domain.is_subtype(o.type, type))
                    out.push_back(o.name);
        return out;
    }
};

} // namespace xaip
