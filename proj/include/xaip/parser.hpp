#pragma once

#include "xaip/error.hpp"
#include "xaip/model.hpp"
#include "xaip/sexpr.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xaip {

namespace detail {

inline const SExpr& single_define(const std::vector<SExpr>& top, std::string_view what) {
    if (top.size() != 1)
        throw SyntaxError(top.empty() ? SourcePos{1, 1} : top[1].pos,
                          "expected exactly one (define (" + std::string(what) + " ...) ...) form");
    const SExpr& def = top[0];
    if (def.head() != "define" || def.size() < 2 || !def[1].is_list || def[1].head() != what || def[1].size() != 2 ||
        !def[1][1].is_atom())
        throw SyntaxError(def.pos, "expected (define (" + std::string(what) + " <name>) ...)");
    return def;
}

inline const std::string& expect_token(const SExpr& e, std::string_view what) {
    if (!e.is_atom())
        throw SyntaxError(e.pos, "expected " + std::string(what) + ", found list");
    return e.token;
}

inline void expect_list(const SExpr& e, std::string_view what) {
    if (!e.is_list)
        throw SyntaxError(e.pos, "expected " + std::string(what) + ", found token '" + e.token + "'");
}

/// `a b - t c - u d` style list. `either` types are outside the subset.
inline std::vector<TypedName> parse_typed_list(const SExpr& list, std::size_t from) {
    std::vector<TypedName> out;
    std::size_t pending = 0;
    for (std::size_t i = from; i < list.size(); ++i) {
        const SExpr& item = list[i];
        if (item.is_atom() && item.token == "-") {
            if (i + 1 >= list.size())
                throw SyntaxError(item.pos, "expected type name after '-'");
            const SExpr& type = list[i + 1];
            if (type.is_list) {
                if (type.head() == "either")
                    throw UnsupportedConstruct(type.pos, "either types");
                throw SyntaxError(type.pos, "expected type name after '-'");
            }
            for (std::size_t k = out.size() - pending; k < out.size(); ++k)
                out[k].type = type.token;
            if (pending == 0)
                throw SyntaxError(item.pos, "type annotation without names");
            pending = 0;
            ++i;
            continue;
        }
        out.push_back({expect_token(item, "name"), "object"});
        ++pending;
    }
    return out;
}

inline void reject_unsupported_form(const SExpr& e) {
    static const std::map<std::string, std::string> unsupported = {
        {"when", "conditional effects"},
        {"forall", "universal quantifiers"},
        {"exists", "existential quantifiers"},
        {"or", "disjunctive conditions"},
        {"imply", "implications"},
        {"not", "negative conditions"},
        {"increase", "numeric effects"},
        {"decrease", "numeric effects"},
        {"assign", "numeric effects"},
        {"scale-up", "numeric effects"},
        {"scale-down", "numeric effects"},
        {"=", "equality or numeric conditions"},
        {"<", "numeric conditions"},
        {">", "numeric conditions"},
        {"<=", "numeric conditions"},
        {">=", "numeric conditions"},
        {"preference", "preferences"},
        {"always", "trajectory constraints"},
        {"sometime", "trajectory constraints"},
    };
    auto it = unsupported.find(e.head());
    if (it != unsupported.end())
        throw UnsupportedConstruct(e.pos, it->second + " ('" + e.head() + "')");
}

class DomainReader {
public:
    Domain read(std::string_view text) {
        auto top = read_sexprs(text);
        const SExpr& def = single_define(top, "domain");
        domain_.name = def[1][1].token;
        std::vector<const SExpr*> actions;
        for (std::size_t i = 2; i < def.size(); ++i) {
            const SExpr& section = def[i];
            expect_list(section, "domain section");
            std::string key = section.head();
            if (key == ":requirements") {
                read_requirements(section);
            } else if (key == ":types") {
                for (auto& t : parse_typed_list(section, 1))
                    domain_.types.push_back({t.name, t.type});
            } else if (key == ":constants") {
                domain_.constants = parse_typed_list(section, 1);
            } else if (key == ":predicates") {
                for (std::size_t k = 1; k < section.size(); ++k)
                    domain_.predicates.push_back(read_signature(section[k]));
            } else if (key == ":functions") {
                read_functions(section);
            } else if (key == ":durative-action") {
                actions.push_back(&section);
            } else if (key == ":action") {
                throw UnsupportedConstruct(section.pos, "instantaneous actions (:action)");
            } else if (key == ":derived") {
                throw UnsupportedConstruct(section.pos, "derived predicates (:derived)");
            } else if (key == ":constraints") {
                throw UnsupportedConstruct(section.pos, "constraints (:constraints)");
            } else {
                throw SyntaxError(section.pos, "unknown domain section '" + key + "'");
            }
        }
        check_declarations(def.pos);
        for (const SExpr* a : actions)
            domain_.actions.push_back(read_action(*a));
        return std::move(domain_);
    }

private:
    void read_requirements(const SExpr& section) {
        static const std::set<std::string> allowed = {":strips", ":typing", ":durative-actions", ":fluents",
                                                      ":numeric-fluents", ":timed-initial-literals", ":equality"};
        for (std::size_t k = 1; k < section.size(); ++k) {
            const std::string& r = expect_token(section[k], "requirement");
            if (!allowed.count(SExpr::lower(r)))
                throw UnsupportedConstruct(section[k].pos, "requirement " + r);
            domain_.requirements.push_back(r);
        }
    }

    PredicateSignature read_signature(const SExpr& e) {
        expect_list(e, "signature");
        if (e.size() == 0)
            throw SyntaxError(e.pos, "empty signature");
        PredicateSignature sig{expect_token(e[0], "name"), parse_typed_list(e, 1)};
        for (const auto& p : sig.params)
            if (!is_variable(p.name))
                throw SyntaxError(e.pos, "signature parameter '" + p.name + "' must start with '?'");
        return sig;
    }

    void read_functions(const SExpr& section) {
        for (std::size_t k = 1; k < section.size(); ++k) {
            const SExpr& item = section[k];
            if (item.is_atom() && item.token == "-") {
                if (k + 1 >= section.size() || !section[k + 1].is_atom() || !iequals(section[k + 1].token, "number"))
                    throw UnsupportedConstruct(item.pos, "non-number function types");
                ++k;
                continue;
            }
            domain_.functions.push_back(read_signature(item));
        }
    }

    void check_declarations(SourcePos pos) {
        std::set<std::string> seen;
        for (const auto& t : domain_.types) {
            if (!seen.insert(SExpr::lower(t.name)).second)
                throw SemanticError(pos, "duplicate type '" + t.name + "'");
        }
        auto check_type = [&](std::string& type) {
            auto r = domain_.resolve_type(type);
            if (!r)
                throw SemanticError(pos, "undeclared type '" + type + "'");
            type = *r;
        };
        for (auto& c : domain_.constants)
            check_type(c.type);
        seen.clear();
        for (auto& p : domain_.predicates) {
            if (!seen.insert(SExpr::lower(p.name)).second)
                throw SemanticError(pos, "duplicate predicate '" + p.name + "'");
            for (auto& param : p.params)
                check_type(param.type);
        }
        seen.clear();
        for (auto& f : domain_.functions) {
            if (!seen.insert(SExpr::lower(f.name)).second)
                throw SemanticError(pos, "duplicate function '" + f.name + "'");
            for (auto& param : f.params)
                check_type(param.type);
        }
    }

    DurativeAction read_action(const SExpr& e) {
        if (e.size() < 2)
            throw SyntaxError(e.pos, "expected action name");
        DurativeAction action;
        action.name = expect_token(e[1], "action name");
        if (domain_.find_action(action.name))
            throw SemanticError(e[1].pos, "duplicate action name '" + action.name + "'");
        bool has_duration = false;
        for (std::size_t i = 2; i < e.size(); i += 2) {
            const std::string& key = SExpr::lower(expect_token(e[i], "action keyword"));
            if (i + 1 >= e.size())
                throw SyntaxError(e[i].pos, "missing value for " + key);
            const SExpr& value = e[i + 1];
            if (key == ":parameters") {
                expect_list(value, "parameter list");
                std::vector<TypedName> params = parse_typed_list(value, 0);
                for (auto& p : params) {
                    if (!is_variable(p.name))
                        throw SyntaxError(value.pos, "parameter '" + p.name + "' must start with '?'");
                    auto t = domain_.resolve_type(p.type);
                    if (!t)
                        throw SemanticError(value.pos, "undeclared type '" + p.type + "'");
                    p.type = *t;
                }
                action.parameters = std::move(params);
            } else if (key == ":duration") {
                action.duration = read_duration(value, action);
                has_duration = true;
            } else if (key == ":condition") {
                read_conditions(value, action, std::nullopt);
            } else if (key == ":effect") {
                read_effects(value, action, std::nullopt);
            } else {
                throw SyntaxError(e[i].pos, "unknown action keyword '" + key + "'");
            }
        }
        if (!has_duration)
            throw SyntaxError(e.pos, "durative action '" + action.name + "' has no :duration");
        return action;
    }

    Expr read_duration(const SExpr& e, const DurativeAction& action) {
        expect_list(e, "duration constraint");
        std::string h = e.head();
        if (h == "and") {
            if (e.size() != 2)
                throw UnsupportedConstruct(e.pos, "multiple duration constraints");
            return read_duration(e[1], action);
        }
        if (h == "<=" || h == ">=" || h == "<" || h == ">")
            throw UnsupportedConstruct(e.pos, "duration inequalities");
        if (h != "=" || e.size() != 3 || !e[1].is_atom() || !iequals(e[1].token, "?duration"))
            throw SyntaxError(e.pos, "expected (= ?duration <expression>)");
        return read_expr(e[2], action);
    }

    Expr read_expr(const SExpr& e, const DurativeAction& action) {
        if (e.is_atom()) {
            auto v = decimal::parse(e.token);
            if (!v)
                throw SyntaxError(e.pos, "expected number or expression, found '" + e.token + "'");
            return Expr::number(*v);
        }
        std::string h = e.head();
        static const std::map<std::string, Expr::Kind> ops = {
            {"+", Expr::Kind::add}, {"-", Expr::Kind::sub}, {"*", Expr::Kind::mul}, {"/", Expr::Kind::div}};
        if (auto it = ops.find(h); it != ops.end()) {
            Expr out;
            if (h == "-" && e.size() == 2) {
                out.kind = Expr::Kind::neg;
                out.operands.push_back(read_expr(e[1], action));
                return out;
            }
            if (e.size() != 3)
                throw SyntaxError(e.pos, "operator '" + h + "' expects two operands");
            out.kind = it->second;
            out.operands.push_back(read_expr(e[1], action));
            out.operands.push_back(read_expr(e[2], action));
            return out;
        }
        if (h == "#t" || h == "?duration")
            throw UnsupportedConstruct(e.pos, "continuous or self-referential duration");
        if (e.size() == 0 || !e[0].is_atom())
            throw SyntaxError(e.pos, "expected function term");
        const FunctionSignature* f = domain_.find_function(e[0].token);
        if (!f)
            throw SemanticError(e.pos, "undeclared function '" + e[0].token + "'");
        Atom term{f->name, {}};
        check_args(e, *f, action, term);
        return Expr::term(std::move(term));
    }

    /// Resolves arguments against action parameters and constants and checks
    /// arity and types.
    void check_args(const SExpr& e, const PredicateSignature& sig, const DurativeAction& action, Atom& out) {
        if (e.size() - 1 != sig.params.size())
            throw SemanticError(e.pos, "arity mismatch for '" + sig.name + "': expected " +
                                           std::to_string(sig.params.size()) + ", got " + std::to_string(e.size() - 1));
        for (std::size_t k = 1; k < e.size(); ++k) {
            const std::string& arg = expect_token(e[k], "argument");
            std::string type;
            std::string canonical;
            if (is_variable(arg)) {
                auto it = std::find_if(action.parameters.begin(), action.parameters.end(),
                                       [&](const TypedName& p) { return iequals(p.name, arg); });
                if (it == action.parameters.end())
                    throw SemanticError(e[k].pos, "unknown parameter '" + arg + "' in action '" + action.name + "'");
                type = it->type;
                canonical = it->name;
            } else {
                auto it = std::find_if(domain_.constants.begin(), domain_.constants.end(),
                                       [&](const TypedName& c) { return iequals(c.name, arg); });
                if (it == domain_.constants.end())
                    throw SemanticError(e[k].pos, "undeclared constant '" + arg + "'");
                type = it->type;
                canonical = it->name;
            }
            const std::string& expected = sig.params[k - 1].type;
            if (!domain_.is_subtype(type, expected))
                throw SemanticError(e[k].pos, "type mismatch for argument " + std::to_string(k) + " of '" + sig.name +
                                                  "': " + type + " is not a " + expected);
            out.args.push_back(canonical);
        }
    }

    Atom read_atom(const SExpr& e, const DurativeAction& action) {
        expect_list(e, "literal");
        reject_unsupported_form(e);
        if (e.size() == 0 || !e[0].is_atom())
            throw SyntaxError(e.pos, "expected predicate name");
        const PredicateSignature* p = domain_.find_predicate(e[0].token);
        if (!p)
            throw SemanticError(e.pos, "undeclared predicate '" + e[0].token + "'");
        Atom atom{p->name, {}};
        check_args(e, *p, action, atom);
        return atom;
    }

    static std::optional<TimeSpec> timed_tag(const SExpr& e) {
        if (!e.is_list || e.size() != 3 || !e[0].is_atom() || !e[1].is_atom())
            return std::nullopt;
        std::string a = SExpr::lower(e[0].token), b = SExpr::lower(e[1].token);
        if (a == "at" && b == "start") return TimeSpec::at_start;
        if (a == "at" && b == "end") return TimeSpec::at_end;
        if (a == "over" && b == "all") return TimeSpec::over_all;
        return std::nullopt;
    }

    void read_conditions(const SExpr& e, DurativeAction& action, std::optional<TimeSpec> when) {
        expect_list(e, "condition");
        if (e.size() == 0)
            return;
        if (e.head() == "and") {
            for (std::size_t k = 1; k < e.size(); ++k)
                read_conditions(e[k], action, when);
            return;
        }
        if (auto tag = timed_tag(e)) {
            if (when)
                throw SyntaxError(e.pos, "nested temporal qualifier");
            read_conditions(e[2], action, tag);
            return;
        }
        if (!when)
            throw SyntaxError(e.pos, "condition must be qualified with at start, over all or at end");
        action.conditions.push_back({*when, read_atom(e, action)});
    }

    void read_effects(const SExpr& e, DurativeAction& action, std::optional<TimeSpec> when) {
        expect_list(e, "effect");
        if (e.size() == 0)
            return;
        std::string h = e.head();
        if (h == "and") {
            for (std::size_t k = 1; k < e.size(); ++k)
                read_effects(e[k], action, when);
            return;
        }
        if (auto tag = timed_tag(e)) {
            if (when)
                throw SyntaxError(e.pos, "nested temporal qualifier");
            if (*tag == TimeSpec::over_all)
                throw SemanticError(e.pos, "effects cannot be qualified with over all");
            read_effects(e[2], action, tag);
            return;
        }
        if ((h == "increase" || h == "decrease") && e.size() == 3 && e[2].is_list && e[2].head() == "*")
            throw UnsupportedConstruct(e.pos, "continuous effects");
        if (h == "not") {
            if (!when)
                throw SyntaxError(e.pos, "effect must be qualified with at start or at end");
            if (e.size() != 2)
                throw SyntaxError(e.pos, "(not ...) takes one literal");
            action.effects.push_back({*when, true, read_atom(e[1], action)});
            return;
        }
        reject_unsupported_form(e);
        if (!when)
            throw SyntaxError(e.pos, "effect must be qualified with at start or at end");
        action.effects.push_back({*when, false, read_atom(e, action)});
    }

    Domain domain_;
};

class ProblemReader {
public:
    explicit ProblemReader(const Domain& domain) : model_{domain, {}} {}

    Problem read(std::string_view text) {
        auto top = read_sexprs(text);
        const SExpr& def = single_define(top, "problem");
        Problem& p = model_.problem;
        p.name = def[1][1].token;
        bool have_domain = false;
        for (std::size_t i = 2; i < def.size(); ++i) {
            const SExpr& section = def[i];
            expect_list(section, "problem section");
            std::string key = section.head();
            if (key == ":domain") {
                if (section.size() != 2)
                    throw SyntaxError(section.pos, "expected (:domain <name>)");
                p.domain_name = expect_token(section[1], "domain name");
                if (!iequals(p.domain_name, model_.domain.name))
                    throw SemanticError(section.pos, "domain name mismatch: problem refers to '" + p.domain_name +
                                                         "', domain is '" + model_.domain.name + "'");
                have_domain = true;
            } else if (key == ":requirements") {
                continue;
            } else if (key == ":objects") {
                read_objects(section);
            } else if (key == ":init") {
                for (std::size_t k = 1; k < section.size(); ++k)
                    read_init(section[k]);
            } else if (key == ":goal") {
                if (section.size() != 2)
                    throw SyntaxError(section.pos, "expected (:goal <condition>)");
                read_goal(section[1]);
            } else if (key == ":metric") {
                read_metric(section);
            } else if (key == ":constraints") {
                throw UnsupportedConstruct(section.pos, "constraints (:constraints)");
            } else {
                throw SyntaxError(section.pos, "unknown problem section '" + key + "'");
            }
        }
        if (!have_domain)
            throw SyntaxError(def.pos, "missing (:domain ...)");
        return std::move(model_.problem);
    }

private:
    void read_objects(const SExpr& section) {
        std::set<std::string> seen;
        for (const auto& c : model_.domain.constants)
            seen.insert(SExpr::lower(c.name));
        for (auto& o : parse_typed_list(section, 1)) {
            auto t = model_.domain.resolve_type(o.type);
            if (!t)
                throw SemanticError(section.pos, "object '" + o.name + "' has undeclared type '" + o.type + "'");
            o.type = *t;
            if (!seen.insert(SExpr::lower(o.name)).second)
                throw SemanticError(section.pos, "duplicate object '" + o.name + "'");
            model_.problem.objects.push_back(o);
        }
    }

    Atom ground_atom(const SExpr& e, bool is_function) {
        expect_list(e, is_function ? "function term" : "ground literal");
        if (!is_function)
            reject_unsupported_form(e);
        if (e.size() == 0 || !e[0].is_atom())
            throw SyntaxError(e.pos, "expected name");
        const PredicateSignature* sig = is_function ? model_.domain.find_function(e[0].token)
                                                    : model_.domain.find_predicate(e[0].token);
        if (!sig)
            throw SemanticError(e.pos, std::string(is_function ? "undeclared function '" : "undeclared predicate '") +
                                           e[0].token + "'");
        if (e.size() - 1 != sig->params.size())
            throw SemanticError(e.pos, "arity mismatch for '" + sig->name + "'");
        Atom atom{sig->name, {}};
        for (std::size_t k = 1; k < e.size(); ++k) {
            const std::string& arg = expect_token(e[k], "object");
            if (is_variable(arg))
                throw SemanticError(e[k].pos, "literal is not ground: '" + arg + "'");
            auto obj = model_.find_object(arg);
            if (!obj)
                throw SemanticError(e[k].pos, "undeclared object '" + arg + "'");
            if (!model_.domain.is_subtype(obj->type, sig->params[k - 1].type))
                throw SemanticError(e[k].pos, "type mismatch: '" + obj->name + "' is a " + obj->type + ", expected " +
                                                  sig->params[k - 1].type);
            atom.args.push_back(obj->name);
        }
        return atom;
    }

    void read_init(const SExpr& e) {
        expect_list(e, "initial literal");
        std::string h = e.head();
        if (h == "=") {
            if (e.size() != 3 || !e[2].is_atom())
                throw SyntaxError(e.pos, "expected (= (<function> ...) <number>)");
            auto v = decimal::parse(e[2].token);
            if (!v)
                throw SyntaxError(e[2].pos, "expected number");
            model_.problem.function_init.push_back({ground_atom(e[1], true), *v});
            return;
        }
        if (h == "at" && e.size() == 3 && e[1].is_atom() && !iequals(e[1].token, "start") &&
            !iequals(e[1].token, "end")) {
            auto t = decimal::parse(e[1].token);
            if (!t)
                throw SyntaxError(e[1].pos, "expected TIL time");
            if (*t <= decimal{})
                throw SemanticError(e.pos, "timed initial literal time must be positive");
            const SExpr& lit = e[2];
            if (lit.head() == "not") {
                if (lit.size() != 2)
                    throw SyntaxError(lit.pos, "(not ...) takes one literal");
                model_.problem.tils.push_back({*t, true, ground_atom(lit[1], false)});
            } else {
                model_.problem.tils.push_back({*t, false, ground_atom(lit, false)});
            }
            return;
        }
        if (h == "not")
            throw SemanticError(e.pos, "negative literals are not allowed in :init");
        model_.problem.init.push_back(ground_atom(e, false));
    }

    void read_goal(const SExpr& e) {
        expect_list(e, "goal");
        if (e.head() == "and") {
            for (std::size_t k = 1; k < e.size(); ++k)
                read_goal(e[k]);
            return;
        }
        if (e.size() == 0)
            return;
        model_.problem.goal.push_back(ground_atom(e, false));
    }

    void read_metric(const SExpr& section) {
        if (section.size() == 3 && section[1].is_atom() && iequals(section[1].token, "minimize") &&
            section[2].is_list && section[2].head() == "total-time" && section[2].size() == 1) {
            model_.problem.minimize_total_time = true;
            return;
        }
        throw UnsupportedConstruct(section.pos, "metrics other than (minimize (total-time))");
    }

    Model model_;
};

} // namespace detail

inline Domain parse_domain(std::string_view text) { return detail::DomainReader().read(text); }

inline Problem parse_problem(std::string_view text, const Domain& domain) {
    return detail::ProblemReader(domain).read(text);
}

inline Model parse_model(std::string_view domain_text, std::string_view problem_text) {
    Model m;
    m.domain = parse_domain(domain_text);
    m.problem = parse_problem(problem_text, m.domain);
    return m;
}

} // namespace xaip
