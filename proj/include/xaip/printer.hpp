#pragma once

#include "xaip/model.hpp"

#include <sstream>
#include <string>
#include <utility>

namespace xaip {

namespace detail {

inline std::string typed_list(const std::vector<TypedName>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i)
            s += " ";
        s += names[i].name + " - " + names[i].type;
    }
    return s;
}

inline std::string expr_text(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::number: return e.value.to_short_string();
    case Expr::Kind::function: return e.function.to_string();
    case Expr::Kind::neg: return "(- " + expr_text(e.operands[0]) + ")";
    case Expr::Kind::add: return "(+ " + expr_text(e.operands[0]) + " " + expr_text(e.operands[1]) + ")";
    case Expr::Kind::sub: return "(- " + expr_text(e.operands[0]) + " " + expr_text(e.operands[1]) + ")";
    case Expr::Kind::mul: return "(* " + expr_text(e.operands[0]) + " " + expr_text(e.operands[1]) + ")";
    case Expr::Kind::div: return "(/ " + expr_text(e.operands[0]) + " " + expr_text(e.operands[1]) + ")";
    }
    return {};
}

} // namespace detail

inline std::string print_domain(const Domain& d) {
    std::ostringstream os;
    os << "(define (domain " << d.name << ")\n";
    if (!d.requirements.empty()) {
        os << "(:requirements";
        for (const auto& r : d.requirements)
            os << " " << r;
        os << ")\n";
    }
    if (!d.types.empty()) {
        os << "(:types";
        for (const auto& t : d.types)
            os << "\n  " << t.name << " - " << t.parent;
        os << ")\n";
    }
    if (!d.constants.empty()) {
        os << "(:constants";
        for (const auto& c : d.constants)
            os << "\n  " << c.name << " - " << c.type;
        os << ")\n";
    }
    os << "(:predicates";
    for (const auto& p : d.predicates) {
        os << "\n  (" << p.name;
        if (!p.params.empty())
            os << " " << detail::typed_list(p.params);
        os << ")";
    }
    os << ")\n";
    if (!d.functions.empty()) {
        os << "(:functions";
        for (const auto& f : d.functions) {
            os << "\n  (" << f.name;
            if (!f.params.empty())
                os << " " << detail::typed_list(f.params);
            os << ")";
        }
        os << ")\n";
    }
    for (const auto& a : d.actions) {
        os << "(:durative-action " << a.name << "\n";
        os << "  :parameters (" << detail::typed_list(a.parameters) << ")\n";
        os << "  :duration (= ?duration " << detail::expr_text(a.duration) << ")\n";
        os << "  :condition (and";
        for (const auto& c : a.conditions)
            os << "\n    (" << to_string(c.when) << " " << c.atom.to_string() << ")";
        os << ")\n";
        os << "  :effect (and";
        for (const auto& e : a.effects) {
            os << "\n    (" << to_string(e.when) << " ";
            if (e.negated)
                os << "(not " << e.atom.to_string() << ")";
            else
                os << e.atom.to_string();
            os << ")";
        }
        os << "))\n";
    }
    os << ")\n";
    return os.str();
}

inline std::string print_problem(const Problem& p) {
    std::ostringstream os;
    os << "(define (problem " << p.name << ")\n";
    os << "(:domain " << p.domain_name << ")\n";
    os << "(:objects";
    for (const auto& o : p.objects)
        os << "\n  " << o.name << " - " << o.type;
    os << ")\n";
    os << "(:init";
    for (const auto& a : p.init)
        os << "\n  " << a.to_string();
    for (const auto& f : p.function_init)
        os << "\n  (= " << f.term.to_string() << " " << f.value.to_short_string() << ")";
    for (const auto& t : p.tils) {
        os << "\n  (at " << t.time.to_short_string() << " ";
        if (t.negated)
            os << "(not " << t.atom.to_string() << ")";
        else
            os << t.atom.to_string();
        os << ")";
    }
    os << ")\n";
    os << "(:goal (and";
    for (const auto& g : p.goal)
        os << "\n  " << g.to_string();
    os << "))\n";
    if (p.minimize_total_time)
        os << "(:metric minimize (total-time))\n";
    os << ")\n";
    return os.str();
}

inline std::pair<std::string, std::string> print_model(const Domain& d, const Problem& p) {
    return {print_domain(d), print_problem(p)};
}

inline std::pair<std::string, std::string> print_model(const Model& m) { return print_model(m.domain, m.problem); }

} // namespace xaip
