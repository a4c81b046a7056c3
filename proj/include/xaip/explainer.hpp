#pragma once

#include "xaip/compiler.hpp"
#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/plan.hpp"
#include "xaip/validator.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace xaip {

struct Comparison {
    /// Steps present in both plans, with the HPlan's timestamps.
    std::vector<PlanStep> existing;
    /// Steps of the original plan with no counterpart in the HPlan.
    std::vector<PlanStep> removed;
    /// Steps of the HPlan with no counterpart in the original plan.
    std::vector<PlanStep> added;
    /// cost(HPlan) - cost(original).
    decimal diffcost;

    bool operator==(const Comparison&) const = default;
};

/// Causal-graph node identity across plans: the k-th occurrence (1-based,
/// in start order) of an action signature, or the init/goal pseudo-nodes.
struct DiffNode {
    std::string signature;
    std::size_t ordinal = 0;

    auto operator<=>(const DiffNode&) const = default;

    std::string label() const { return ordinal > 1 ? signature + " #" + std::to_string(ordinal) : signature; }
};

struct DiffEdge {
    DiffNode producer;
    DiffNode consumer;
    Atom literal;

    auto operator<=>(const DiffEdge&) const = default;
};

struct CausalDiff {
    std::vector<DiffNode> shared_nodes, added_nodes, removed_nodes;
    std::vector<DiffEdge> shared_edges, added_edges, removed_edges;

    bool operator==(const CausalDiff&) const = default;
};

struct ContrastiveExplanation {
    Comparison comparison;
    FormalQuestion question;
    /// Validation of the stripped HPlan against the original model.
    ValidationReport hplan_validation;
    /// Indices into the stripped HPlan of suggested or forced steps that the
    /// plan does not need.
    std::vector<std::size_t> redundancy_flags;
    std::optional<CausalDiff> causal_diff;

    bool operator==(const ContrastiveExplanation&) const = default;
};

namespace detail {

inline std::string signature_key(const GroundAction& g) { return SExpr::lower(g.signature()); }

} // namespace detail

/// Multiset comparison on action signatures; timestamps and durations are
/// ignored for matching. Duplicates pair earliest to earliest.
inline Comparison compare(const TimedPlan& pi, const TimedPlan& pi_h) {
    std::map<std::string, std::vector<std::size_t>> unmatched;
    for (std::size_t i = 0; i < pi.size(); ++i)
        unmatched[detail::signature_key(pi.steps[i].action)].push_back(i);
    std::vector<bool> original_matched(pi.size(), false);
    Comparison c;
    for (const auto& s : pi_h.steps) {
        auto& queue = unmatched[detail::signature_key(s.action)];
        if (queue.empty()) {
            c.added.push_back(s);
            continue;
        }
        original_matched[queue.front()] = true;
        queue.erase(queue.begin());
        c.existing.push_back(s);
    }
    for (std::size_t i = 0; i < pi.size(); ++i)
        if (!original_matched[i])
            c.removed.push_back(pi.steps[i]);
    c.diffcost = pi_h.cost() - pi.cost();
    return c;
}

namespace detail {

inline std::vector<DiffNode> diff_nodes(const CausalGraph& g) {
    std::vector<DiffNode> out{{"init", 0}};
    std::map<std::string, std::size_t> seen;
    for (const auto& s : g.steps) {
        std::string sig = s.action.signature();
        out.push_back({sig, ++seen[signature_key(s.action)]});
    }
    out.push_back({"goal", 0});
    return out;
}

inline DiffNode diff_node(const std::vector<DiffNode>& nodes, const CausalNode& n) {
    switch (n.kind) {
    case CausalNode::Kind::init: return nodes.front();
    case CausalNode::Kind::goal: return nodes.back();
    case CausalNode::Kind::step: return nodes[n.step + 1];
    }
    return {};
}

/// Case-insensitive node key so that signatures match across plans.
inline DiffNode normalized(DiffNode n) {
    n.signature = SExpr::lower(n.signature);
    return n;
}

template <class T, class Key>
void partition(const std::vector<T>& a, const std::vector<T>& b, Key key, std::vector<T>& shared, std::vector<T>& removed,
               std::vector<T>& added) {
    std::map<decltype(key(a.front())), const T*> in_a, in_b;
    for (const auto& x : a)
        in_a.emplace(key(x), &x);
    for (const auto& x : b)
        in_b.emplace(key(x), &x);
    for (const auto& [k, x] : in_b)
        (in_a.count(k) ? shared : added).push_back(*x);
    for (const auto& [k, x] : in_a)
        if (!in_b.count(k))
            removed.push_back(*x);
}

} // namespace detail

/// Partitions the nodes and edges of two causal graphs (original `g1`,
/// hypothetical `g2`) into shared, added and removed.
inline CausalDiff diff_causal(const CausalGraph& g1, const CausalGraph& g2) {
    auto n1 = detail::diff_nodes(g1), n2 = detail::diff_nodes(g2);
    auto edges = [](const CausalGraph& g, const std::vector<DiffNode>& nodes) {
        std::vector<DiffEdge> out;
        for (const auto& e : g.edges)
            out.push_back({detail::diff_node(nodes, e.producer), detail::diff_node(nodes, e.consumer), e.literal});
        return out;
    };
    auto e1 = edges(g1, n1), e2 = edges(g2, n2);
    CausalDiff d;
    detail::partition(n1, n2, [](const DiffNode& n) { return detail::normalized(n); }, d.shared_nodes, d.removed_nodes,
                      d.added_nodes);
    detail::partition(
        e1, e2,
        [](const DiffEdge& e) {
            return std::tuple(detail::normalized(e.producer), detail::normalized(e.consumer), e.literal);
        },
        d.shared_edges, d.removed_edges, d.added_edges);
    return d;
}

namespace detail {

inline std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

/// Graphviz rendering: added nodes and edges red, removed blue, shared
/// default.
inline std::string to_dot(const CausalDiff& d) {
    std::string out = "digraph causal_diff {\n";
    auto node = [&](const DiffNode& n, const char* color) {
        out += "  " + detail::dot_quote(n.label());
        if (color)
            out += std::string(" [color=") + color + ", fontcolor=" + color + "]";
        out += ";\n";
    };
    auto edge = [&](const DiffEdge& e, const char* color) {
        out += "  " + detail::dot_quote(e.producer.label()) + " -> " + detail::dot_quote(e.consumer.label()) +
               " [label=" + detail::dot_quote(e.literal.to_string());
        if (color)
            out += std::string(", color=") + color + ", fontcolor=" + color;
        out += "];\n";
    };
    for (const auto& n : d.shared_nodes)
        node(n, nullptr);
    for (const auto& n : d.removed_nodes)
        node(n, "blue");
    for (const auto& n : d.added_nodes)
        node(n, "red");
    for (const auto& e : d.shared_edges)
        edge(e, nullptr);
    for (const auto& e : d.removed_edges)
        edge(e, "blue");
    for (const auto& e : d.added_edges)
        edge(e, "red");
    return out + "}\n";
}

/// The action whose necessity the explanation checks: the suggested B for
/// replacements, the forced A for forcing questions.
inline std::optional<GroundAction> redundancy_focus(const FormalQuestion& q) {
    switch (q.kind) {
    case QuestionKind::replace:
    case QuestionKind::replace_in_state: return q.action_b;
    case QuestionKind::force_action: return q.action_a;
    default: return std::nullopt;
    }
}

/// Builds the contrastive explanation for HPlan `pi_h` (which may contain
/// generated clone steps) against the original plan `pi`. Throws
/// InternalError when the stripped HPlan is invalid in the original model.
inline ContrastiveExplanation explain(const TimedPlan& pi, const TimedPlan& pi_h, const FormalQuestion& q,
                                      const Model& original, const std::map<std::string, GroundAction>& clones = {}) {
    TimedPlan stripped = strip_back(pi_h, clones);
    ContrastiveExplanation ce;
    ce.question = q;
    ce.hplan_validation = validate(original, stripped);
    if (!ce.hplan_validation.valid)
        throw InternalError("HPlan is invalid against the original model: " + ce.hplan_validation.failure->detail);
    ce.comparison = compare(pi, stripped);
    if (auto focus = redundancy_focus(q))
        ce.redundancy_flags = find_redundant(original, stripped, focus);
    if (validate(original, pi).valid)
        ce.causal_diff = diff_causal(causal_links(original, pi), causal_links(original, stripped));
    return ce;
}

} // namespace xaip
