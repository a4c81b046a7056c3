#pragma once

#include "xaip/explainer.hpp"
#include "xaip/parser.hpp"
#include "xaip/planner.hpp"
#include "xaip/printer.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace xaip {

using json = nlohmann::ordered_json;

/// Wire or file content with the wrong shape: missing fields, wrong types,
/// unknown enumerators, unsupported schema versions.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error("schema error: " + what) {}
};

namespace detail {

inline const json& field(const json& j, const char* name) {
    if (!j.is_object())
        throw SchemaError(std::string("expected an object holding '") + name + "'");
    auto it = j.find(name);
    if (it == j.end())
        throw SchemaError(std::string("missing field '") + name + "'");
    return *it;
}

inline const json* optional_field(const json& j, const char* name) {
    if (!j.is_object())
        throw SchemaError(std::string("expected an object holding '") + name + "'");
    auto it = j.find(name);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline std::string string_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_string())
        throw SchemaError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

inline std::string string_value(const json& v, const char* what) {
    if (!v.is_string())
        throw SchemaError(std::string(what) + " must be a string");
    return v.get<std::string>();
}

inline const json& array_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_array())
        throw SchemaError(std::string("field '") + name + "' must be an array");
    return v;
}

inline std::size_t index_value(const json& v, const char* what) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw SchemaError(std::string(what) + " must be a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace detail

/// Decimals are written as JSON numbers; both numbers and decimal strings
/// are accepted on input.
inline json to_json(decimal d) {
    if (d.ticks() % decimal::scale == 0)
        return d.ticks() / decimal::scale;
    return d.to_double();
}

inline decimal decimal_from_json(const json& v, const char* what) {
    if (v.is_number_integer())
        return decimal::from_int(v.get<std::int64_t>());
    if (v.is_number()) {
        double x = v.get<double>() * decimal::scale;
        if (!std::isfinite(x) || std::fabs(x) > 9e15)
            throw SchemaError(std::string(what) + " is out of range");
        return decimal::from_ticks(static_cast<std::int64_t>(std::llround(x)));
    }
    if (v.is_string()) {
        if (auto d = decimal::parse(v.get<std::string>()))
            return *d;
    }
    throw SchemaError(std::string(what) + " must be a decimal number");
}

inline json to_json(const Atom& a) { return a.to_string(); }

inline Atom atom_from_json(const json& v) {
    std::string text = detail::string_value(v, "literal");
    std::vector<SExpr> e;
    try {
        e = read_sexprs(text);
    } catch (const SyntaxError& err) {
        throw SchemaError("literal '" + text + "': " + err.what());
    }
    if (e.size() != 1 || !e[0].is_list || e[0].size() == 0)
        throw SchemaError("expected a literal '(pred arg ...)', got '" + text + "'");
    Atom a;
    for (std::size_t i = 0; i < e[0].size(); ++i) {
        if (!e[0][i].is_atom())
            throw SchemaError("nested list in literal '" + text + "'");
        (i ? a.args.emplace_back() : a.predicate) = e[0][i].token;
    }
    return a;
}

// ---- plans ----

inline json to_json(const PlanStep& s) {
    return {{"start", to_json(s.start)}, {"action", s.action.signature()}, {"duration", to_json(s.duration)}};
}

inline json to_json(const std::vector<PlanStep>& steps) {
    json a = json::array();
    for (const auto& s : steps)
        a.push_back(to_json(s));
    return a;
}

inline json to_json(const TimedPlan& p) { return to_json(p.steps); }

/// Grounds an action literal against `model`, reporting failures as
/// UsageError.
inline GroundAction action_from_json(const json& v, const Model& model, const char* what) {
    return parse_action_literal(model, detail::string_value(v, what));
}

inline PlanStep step_from_json(const json& j, const Model& model) {
    PlanStep s;
    s.start = decimal_from_json(detail::field(j, "start"), "start");
    s.action = action_from_json(detail::field(j, "action"), model, "action");
    const json* d = detail::optional_field(j, "duration");
    s.duration = d ? decimal_from_json(*d, "duration") : s.action.duration;
    return s;
}

inline std::vector<PlanStep> steps_from_json(const json& a, const Model& model) {
    if (!a.is_array())
        throw SchemaError("plan must be an array of steps");
    std::vector<PlanStep> out;
    for (const auto& s : a)
        out.push_back(step_from_json(s, model));
    return out;
}

inline TimedPlan plan_from_json(const json& a, const Model& model) {
    TimedPlan p{steps_from_json(a, model)};
    p.normalize();
    return p;
}

// ---- questions ----

inline json to_json(const FormalQuestion& q) {
    json j = {{"kind", std::string(to_string(q.kind))}, {"action_a", q.action_a.signature()}};
    if (q.action_b)
        j["action_b"] = q.action_b->signature();
    if (q.occurrence_index)
        j["occurrence_index"] = *q.occurrence_index;
    if (q.window)
        j["window"] = {{"lb", to_json(q.window->lb)}, {"ub", to_json(q.window->ub)}};
    if (q.containment)
        j["containment"] = true;
    return j;
}

/// Reads the question wire format. Shape problems raise SchemaError;
/// actions that do not ground in `model` raise CompilationError, since
/// they are a rejection of the question rather than of its encoding.
inline FormalQuestion question_from_json(const json& j, const Model& model) {
    FormalQuestion q;
    std::string kind = detail::string_field(j, "kind");
    auto k = parse_question_kind(kind);
    if (!k)
        throw SchemaError("unknown question kind '" + kind + "'");
    q.kind = *k;
    auto ground = [&](const char* name) {
        try {
            return action_from_json(detail::field(j, name), model, name);
        } catch (const UsageError& e) {
            throw CompilationError(std::string(name) + ": " + e.what());
        }
    };
    q.action_a = ground("action_a");
    if (detail::optional_field(j, "action_b"))
        q.action_b = ground("action_b");
    if (const json* i = detail::optional_field(j, "occurrence_index"))
        q.occurrence_index = detail::index_value(*i, "occurrence_index");
    if (const json* w = detail::optional_field(j, "window"))
        q.window = TimeWindow{decimal_from_json(detail::field(*w, "lb"), "window.lb"),
                              decimal_from_json(detail::field(*w, "ub"), "window.ub")};
    if (const json* c = detail::optional_field(j, "containment")) {
        if (!c->is_boolean())
            throw SchemaError("containment must be a boolean");
        q.containment = c->get<bool>();
    }
    return q;
}

// ---- validation ----

inline std::string_view reason_name(FailureReason r) {
    switch (r) {
    case FailureReason::start_condition: return "start_condition";
    case FailureReason::over_all_condition: return "over_all_condition";
    case FailureReason::end_condition: return "end_condition";
    case FailureReason::mutex_violation: return "mutex_violation";
    case FailureReason::goal_unsatisfied: return "goal_unsatisfied";
    case FailureReason::invalid_duration: return "invalid_duration";
    }
    return "";
}

inline json to_json(const Failure& f) {
    json j = {{"time", to_json(f.time)}, {"reason", std::string(reason_name(f.reason))}};
    j["literal"] = f.literal ? json(f.literal->to_string()) : json();
    j["step"] = f.step ? json(*f.step) : json();
    j["detail"] = f.detail;
    return j;
}

/// Summary of a report: the happening trace is left out.
inline json to_json(const ValidationReport& r) {
    json j = {{"valid", r.valid}, {"cost", to_json(r.cost)}};
    j["failure"] = r.failure ? to_json(*r.failure) : json();
    return j;
}

// ---- explanations ----

inline json to_json(const Comparison& c) {
    return {{"existing", to_json(c.existing)},
            {"removed", to_json(c.removed)},
            {"added", to_json(c.added)},
            {"diffcost", to_json(c.diffcost)}};
}

inline Comparison comparison_from_json(const json& j, const Model& model) {
    return {steps_from_json(detail::field(j, "existing"), model), steps_from_json(detail::field(j, "removed"), model),
            steps_from_json(detail::field(j, "added"), model), decimal_from_json(detail::field(j, "diffcost"), "diffcost")};
}

inline json to_json(const DiffNode& n) { return {{"signature", n.signature}, {"ordinal", n.ordinal}}; }

inline DiffNode diff_node_from_json(const json& j) {
    return {detail::string_field(j, "signature"), detail::index_value(detail::field(j, "ordinal"), "ordinal")};
}

inline json to_json(const DiffEdge& e) {
    return {{"producer", to_json(e.producer)}, {"consumer", to_json(e.consumer)}, {"literal", to_json(e.literal)}};
}

inline DiffEdge diff_edge_from_json(const json& j) {
    return {diff_node_from_json(detail::field(j, "producer")), diff_node_from_json(detail::field(j, "consumer")),
            atom_from_json(detail::field(j, "literal"))};
}

inline json to_json(const CausalDiff& d) {
    auto nodes = [](const std::vector<DiffNode>& v) {
        json a = json::array();
        for (const auto& n : v)
            a.push_back(to_json(n));
        return a;
    };
    auto edges = [](const std::vector<DiffEdge>& v) {
        json a = json::array();
        for (const auto& e : v)
            a.push_back(to_json(e));
        return a;
    };
    return {{"shared_nodes", nodes(d.shared_nodes)}, {"added_nodes", nodes(d.added_nodes)},
            {"removed_nodes", nodes(d.removed_nodes)}, {"shared_edges", edges(d.shared_edges)},
            {"added_edges", edges(d.added_edges)},     {"removed_edges", edges(d.removed_edges)}};
}

inline CausalDiff causal_diff_from_json(const json& j) {
    auto nodes = [&](const char* name) {
        std::vector<DiffNode> v;
        for (const auto& n : detail::array_field(j, name))
            v.push_back(diff_node_from_json(n));
        return v;
    };
    auto edges = [&](const char* name) {
        std::vector<DiffEdge> v;
        for (const auto& e : detail::array_field(j, name))
            v.push_back(diff_edge_from_json(e));
        return v;
    };
    return {nodes("shared_nodes"), nodes("added_nodes"), nodes("removed_nodes"),
            edges("shared_edges"), edges("added_edges"), edges("removed_edges")};
}

inline json to_json(const ContrastiveExplanation& ce) {
    json j = {{"comparison", to_json(ce.comparison)},
              {"question", to_json(ce.question)},
              {"hplan_validation", to_json(ce.hplan_validation)},
              {"redundancy_flags", ce.redundancy_flags}};
    j["causal_diff"] = ce.causal_diff ? to_json(*ce.causal_diff) : json();
    j["causal_diff_dot"] = ce.causal_diff ? json(to_dot(*ce.causal_diff)) : json();
    return j;
}

/// Reads an explanation back. The validation report is not stored in full,
/// so it is recomputed from `hplan` and checked against the stored summary.
inline ContrastiveExplanation explanation_from_json(const json& j, const Model& model, const TimedPlan& hplan) {
    ContrastiveExplanation ce;
    ce.comparison = comparison_from_json(detail::field(j, "comparison"), model);
    ce.question = question_from_json(detail::field(j, "question"), model);
    ce.hplan_validation = validate(model, hplan);
    if (json(to_json(ce.hplan_validation)) != detail::field(j, "hplan_validation"))
        throw SchemaError("stored validation summary does not match the stored plan");
    for (const auto& i : detail::array_field(j, "redundancy_flags"))
        ce.redundancy_flags.push_back(detail::index_value(i, "redundancy flag"));
    if (const json* d = detail::optional_field(j, "causal_diff"))
        ce.causal_diff = causal_diff_from_json(*d);
    return ce;
}

// ---- HModels ----

/// `original` is the model every action literal is grounded against.
inline json to_json(const HModel& h) {
    auto [domain, problem] = print_model(h.model);
    json provenance = json::array();
    for (const auto& q : h.provenance)
        provenance.push_back(to_json(q));
    json clones = json::object();
    for (const auto& [name, g] : h.clones)
        clones[name] = g.signature();
    json j = {{"domain", domain},
              {"problem", problem},
              {"provenance", provenance},
              {"generated", h.generated},
              {"clones", clones},
              {"prefix", to_json(h.prefix)},
              {"time_origin", to_json(h.time_origin)}};
    j["blocked"] = h.blocked ? json(*h.blocked) : json();
    return j;
}

inline HModel hmodel_from_json(const json& j, const Model& original) {
    HModel h;
    h.model = parse_model(detail::string_field(j, "domain"), detail::string_field(j, "problem"));
    for (const auto& q : detail::array_field(j, "provenance"))
        h.provenance.push_back(question_from_json(q, original));
    for (const auto& g : detail::array_field(j, "generated"))
        h.generated.push_back(detail::string_value(g, "generated name"));
    const json& clones = detail::field(j, "clones");
    if (!clones.is_object())
        throw SchemaError("clones must be an object");
    for (const auto& [name, g] : clones.items())
        h.clones.emplace(name, action_from_json(g, original, "clone"));
    h.prefix = steps_from_json(detail::field(j, "prefix"), original);
    h.time_origin = decimal_from_json(detail::field(j, "time_origin"), "time_origin");
    if (const json* b = detail::optional_field(j, "blocked"))
        h.blocked = detail::string_value(*b, "blocked");
    return h;
}

// ---- planner configuration ----

inline json to_json(const PlannerConfig& c) {
    return {{"mode", c.mode == PlannerMode::builtin ? "builtin" : "external"},
            {"command", c.command},
            {"timeout", c.timeout},
            {"output_format", c.output_format},
            {"builtin_limits",
             {{"max_expanded_states", c.builtin.max_expanded_states}, {"max_objects", c.builtin.max_objects}}}};
}

/// Missing fields keep their defaults.
inline PlannerConfig planner_config_from_json(const json& j, PlannerConfig c = {}) {
    if (!j.is_object())
        throw SchemaError("planner configuration must be an object");
    if (const json* m = detail::optional_field(j, "mode")) {
        std::string mode = detail::string_value(*m, "mode");
        if (mode == "builtin")
            c.mode = PlannerMode::builtin;
        else if (mode == "external")
            c.mode = PlannerMode::external;
        else
            throw SchemaError("unknown planner mode '" + mode + "'");
    }
    if (const json* v = detail::optional_field(j, "command"))
        c.command = detail::string_value(*v, "command");
    if (const json* v = detail::optional_field(j, "timeout")) {
        if (!v->is_number())
            throw SchemaError("timeout must be a number");
        c.timeout = v->get<double>();
    }
    if (const json* v = detail::optional_field(j, "output_format"))
        c.output_format = detail::string_value(*v, "output_format");
    if (const json* b = detail::optional_field(j, "builtin_limits")) {
        if (const json* v = detail::optional_field(*b, "max_expanded_states"))
            c.builtin.max_expanded_states = detail::index_value(*v, "max_expanded_states");
        if (const json* v = detail::optional_field(*b, "max_objects"))
            c.builtin.max_objects = detail::index_value(*v, "max_objects");
    }
    return c;
}

} // namespace xaip
