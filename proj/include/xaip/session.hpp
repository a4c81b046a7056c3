#pragma once

#include "xaip/serialize.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>

namespace xaip {

inline constexpr int session_schema_version = 1;

/// Unknown session or node id.
class NotFound : public Error {
public:
    using Error::Error;
};

/// Another ask is in flight on the same session.
class Busy : public Error {
public:
    using Error::Error;
};

/// A rejected input that comes with a structured reason: an invalid root
/// plan, or a planner that could not produce the root plan.
class Rejected : public Error {
public:
    Rejected(const std::string& what, json detail) : Error(what), detail(std::move(detail)) {}
    json detail;
};

struct ExplanationNode {
    std::string id;
    std::optional<std::string> parent;
    std::optional<FormalQuestion> question;
    HModel hmodel;
    PlanningStatus status = PlanningStatus::plan_found;
    /// Full plan in the original model's vocabulary (prefix assembled,
    /// clones stripped); absent unless status is plan-found.
    std::optional<TimedPlan> plan;
    std::optional<ContrastiveExplanation> explanation;
    std::string planner_log;
    std::string created_at;

    bool operator==(const ExplanationNode&) const = default;
};

struct Session {
    std::string id;
    std::string domain_text;
    std::string problem_text;
    Model model;
    PlannerConfig planner;
    std::vector<ExplanationNode> nodes;

    bool operator==(const Session&) const = default;

    const ExplanationNode& root() const { return nodes.front(); }

    const ExplanationNode& node(std::string_view id) const {
        for (const auto& n : nodes)
            if (n.id == id)
                return n;
        throw NotFound("unknown node '" + std::string(id) + "'");
    }
};

namespace detail {

inline std::string now_utc() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string random_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream os;
    os << std::hex << rng();
    return os.str();
}

inline json failure_detail(const ValidationReport& r) { return {{"validation", to_json(r)}}; }

} // namespace detail

/// Builds a session whose root holds the original model and either the
/// given plan (which must validate) or one produced by the planner.
inline Session create_session(const std::string& domain_text, const std::string& problem_text,
                              const std::optional<std::string>& plan_text, const PlannerConfig& config,
                              std::stop_token stop = {}) {
    config.check();
    Session s;
    s.id = detail::random_id();
    s.domain_text = domain_text;
    s.problem_text = problem_text;
    s.model = parse_model(domain_text, problem_text);
    s.planner = config;
    ExplanationNode root;
    root.id = "n0";
    root.hmodel = root_hmodel(s.model);
    root.created_at = detail::now_utc();
    if (plan_text) {
        TimedPlan p = parse_plan(*plan_text, s.model);
        ValidationReport r = validate(s.model, p);
        if (!r.valid)
            throw Rejected("root plan is invalid: " + r.failure->detail, detail::failure_detail(r));
        root.plan = std::move(p);
    } else {
        PlanningOutcome out = plan(root.hmodel, config, stop);
        if (out.status != PlanningStatus::plan_found)
            throw Rejected("planner did not produce a root plan: " + std::string(to_string(out.status)),
                           {{"status", to_string(out.status)}, {"planner_log", out.planner_log}});
        root.plan = std::move(out.plan);
        root.planner_log = std::move(out.planner_log);
    }
    s.nodes.push_back(std::move(root));
    return s;
}

/// Compiles `q` onto the parent's HModel, plans, assembles and explains.
/// The returned node is not yet part of the session; see `ask`.
inline ExplanationNode answer(const Session& s, const ExplanationNode& parent, const FormalQuestion& q,
                              std::stop_token stop = {}) {
    if (!parent.plan)
        throw CompilationError("node '" + parent.id + "' has no plan to ask about (status " +
                               std::string(to_string(parent.status)) + ")");
    ExplanationNode child;
    child.parent = parent.id;
    child.question = q;
    child.hmodel = compile(parent.hmodel, *parent.plan, q);
    child.created_at = detail::now_utc();
    PlanningOutcome out = plan(child.hmodel, s.planner, stop);
    child.status = out.status;
    child.planner_log = std::move(out.planner_log);
    if (out.status != PlanningStatus::plan_found)
        return child;
    const HModel& h = child.hmodel;
    TimedPlan hplan = assemble_hplan(h.prefix, *out.plan, h.time_origin);
    // The projection keeps in-flight end effects but not in-flight
    // invariants, so a suffix can be valid for the HModel yet break the
    // original; such HPlans are never presented as explanations.
    ValidationReport gate = validate(s.model, strip_back(hplan, h.clones));
    if (!gate.valid) {
        child.status = PlanningStatus::planner_error;
        child.planner_log += (child.planner_log.empty() ? "" : "\n") +
                             std::string("HPlan rejected by validation against the original model: ") +
                             gate.failure->detail;
        return child;
    }
    child.explanation = explain(*s.root().plan, hplan, q, s.model, h.clones);
    child.plan = strip_back(hplan, h.clones);
    return child;
}

/// Appends the answer to `q` on node `node_id` and returns it.
inline const ExplanationNode& ask(Session& s, std::string_view node_id, const FormalQuestion& q,
                                  std::stop_token stop = {}) {
    ExplanationNode child = answer(s, s.node(node_id), q, stop);
    child.id = "n" + std::to_string(s.nodes.size());
    s.nodes.push_back(std::move(child));
    return s.nodes.back();
}

// ---- views and persistence ----

inline json tree_view(const Session& s) {
    json nodes = json::array();
    for (const auto& n : s.nodes) {
        json j = {{"id", n.id}};
        j["parent"] = n.parent ? json(*n.parent) : json();
        j["question"] = n.question ? json(n.question->summary()) : json();
        j["status"] = to_string(n.status);
        j["cost"] = n.plan ? to_json(n.plan->cost()) : json();
        j["diffcost"] = n.explanation ? to_json(n.explanation->comparison.diffcost) : json();
        json children = json::array();
        for (const auto& c : s.nodes)
            if (c.parent == n.id)
                children.push_back(c.id);
        j["children"] = children;
        nodes.push_back(j);
    }
    return {{"session", s.id}, {"root", s.root().id}, {"nodes", nodes}};
}

inline json to_json(const ExplanationNode& n) {
    json j = {{"id", n.id}};
    j["parent"] = n.parent ? json(*n.parent) : json();
    j["question"] = n.question ? to_json(*n.question) : json();
    j["status"] = to_string(n.status);
    j["plan"] = n.plan ? to_json(*n.plan) : json();
    j["cost"] = n.plan ? to_json(n.plan->cost()) : json();
    j["explanation"] = n.explanation ? to_json(*n.explanation) : json();
    j["hmodel"] = to_json(n.hmodel);
    j["planner_log"] = n.planner_log;
    j["created_at"] = n.created_at;
    return j;
}

/// The node as served by the API: the stored form plus the plan's
/// validation report against the original model and printable plan text.
inline json node_view(const Session& s, const ExplanationNode& n) {
    json j = to_json(n);
    j["validation"] = n.plan ? to_json(validate(s.model, *n.plan)) : json();
    j["plan_text"] = n.plan ? json(print_plan(*n.plan)) : json();
    return j;
}

inline ExplanationNode node_from_json(const json& j, const Model& original) {
    ExplanationNode n;
    n.id = detail::string_field(j, "id");
    if (const json* p = detail::optional_field(j, "parent"))
        n.parent = detail::string_value(*p, "parent");
    if (const json* q = detail::optional_field(j, "question"))
        n.question = question_from_json(*q, original);
    std::string status = detail::string_field(j, "status");
    auto st = parse_planning_status(status);
    if (!st)
        throw SchemaError("unknown status '" + status + "'");
    n.status = *st;
    n.hmodel = hmodel_from_json(detail::field(j, "hmodel"), original);
    if (const json* p = detail::optional_field(j, "plan"))
        n.plan = plan_from_json(*p, original);
    if (const json* e = detail::optional_field(j, "explanation")) {
        if (!n.plan)
            throw SchemaError("node '" + n.id + "' has an explanation but no plan");
        n.explanation = explanation_from_json(*e, original, *n.plan);
    }
    n.planner_log = detail::string_field(j, "planner_log");
    n.created_at = detail::string_field(j, "created_at");
    return n;
}

inline json to_json(const Session& s) {
    json nodes = json::array();
    for (const auto& n : s.nodes)
        nodes.push_back(to_json(n));
    return {{"schema_version", session_schema_version},
            {"id", s.id},
            {"domain", s.domain_text},
            {"problem", s.problem_text},
            {"planner", to_json(s.planner)},
            {"nodes", nodes}};
}

/// Rebuilds a session, checking the tree invariants.
inline Session session_from_json(const json& j) {
    const json& version = detail::field(j, "schema_version");
    if (!version.is_number_integer() || version.get<int>() != session_schema_version)
        throw SchemaError("unsupported schema_version " + version.dump() + ", expected " +
                          std::to_string(session_schema_version));
    Session s;
    s.id = detail::string_field(j, "id");
    s.domain_text = detail::string_field(j, "domain");
    s.problem_text = detail::string_field(j, "problem");
    s.model = parse_model(s.domain_text, s.problem_text);
    s.planner = planner_config_from_json(detail::field(j, "planner"));
    std::set<std::string> ids;
    for (const auto& nj : detail::array_field(j, "nodes")) {
        ExplanationNode n = node_from_json(nj, s.model);
        if (!ids.insert(n.id).second)
            throw SchemaError("duplicate node id '" + n.id + "'");
        if (s.nodes.empty() ? n.parent.has_value() : !n.parent || !ids.count(*n.parent) || *n.parent == n.id)
            throw SchemaError("node '" + n.id + "' breaks the tree structure");
        s.nodes.push_back(std::move(n));
    }
    if (s.nodes.empty())
        throw SchemaError("session has no root node");
    return s;
}

inline void save_session(const Session& s, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out)
            throw UsageError("cannot write " + tmp);
        out << to_json(s).dump(2) << "\n";
        if (!out)
            throw UsageError("cannot write " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw UsageError("cannot replace " + path);
}

inline Session load_session(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw SchemaError(path + " is not a well-formed session document");
    return session_from_json(j);
}

/// All type-correct groundings of `schema` whose duration evaluates.
inline json ground_actions(const Model& m, std::string_view schema) {
    const DurativeAction* a = m.domain.find_action(schema);
    if (!a)
        throw NotFound("unknown action schema '" + std::string(schema) + "'");
    json out = json::array();
    for (const auto& args : detail::groundings(m, a->parameters)) {
        try {
            GroundAction g = ground_action(m, a->name, args);
            out.push_back({{"action", g.signature()}, {"duration", to_json(g.duration)}});
        } catch (const UsageError&) {
        }
    }
    return out;
}

// ---- concurrent service ----

/// In-memory session store shared by the HTTP handlers. Asks on one
/// session are serialized; reads never wait for an ask because planning
/// runs outside the tree lock.
class SessionService {
public:
    explicit SessionService(PlannerConfig default_planner = {}) : default_planner_(std::move(default_planner)) {}

    ~SessionService() {
        std::lock_guard lock(mu_);
        for (auto& [id, e] : sessions_)
            e->stop.request_stop();
    }

    const PlannerConfig& default_planner() const { return default_planner_; }

    std::string create(const std::string& domain, const std::string& problem, const std::optional<std::string>& plan,
                       const std::optional<PlannerConfig>& config) {
        auto e = std::make_shared<Entry>();
        e->session = create_session(domain, problem, plan, config.value_or(default_planner_), e->stop.get_token());
        return insert(std::move(e));
    }

    std::string adopt(Session s) {
        auto e = std::make_shared<Entry>();
        e->session = std::move(s);
        return insert(std::move(e));
    }

    json tree(const std::string& id) {
        auto e = find(id);
        std::shared_lock lock(e->tree_mu);
        return tree_view(e->session);
    }

    json node(const std::string& id, const std::string& nid) {
        auto e = find(id);
        std::shared_lock lock(e->tree_mu);
        return node_view(e->session, e->session.node(nid));
    }

    Session snapshot(const std::string& id) {
        auto e = find(id);
        std::shared_lock lock(e->tree_mu);
        return e->session;
    }

    json ground(const std::string& id, std::string_view schema) {
        auto e = find(id);
        std::shared_lock lock(e->tree_mu);
        return ground_actions(e->session.model, schema);
    }

    /// Answers a wire-format question; returns the new node's summary.
    json ask(const std::string& id, const std::string& nid, const json& question) {
        auto e = find(id);
        std::unique_lock ask_lock(e->ask_mu, std::try_to_lock);
        if (!ask_lock.owns_lock())
            throw Busy("an ask is already in flight for session '" + id + "'");
        Session copy;
        {
            std::shared_lock lock(e->tree_mu);
            copy = e->session;
        }
        const ExplanationNode& parent = copy.node(nid);
        FormalQuestion q = question_from_json(question, copy.model);
        ExplanationNode child = answer(copy, parent, q, e->stop.get_token());
        std::unique_lock lock(e->tree_mu);
        child.id = "n" + std::to_string(e->session.nodes.size());
        e->session.nodes.push_back(std::move(child));
        const ExplanationNode& n = e->session.nodes.back();
        json out = {{"node", n.id}, {"status", to_string(n.status)}};
        out["cost"] = n.plan ? to_json(n.plan->cost()) : json();
        out["diffcost"] = n.explanation ? to_json(n.explanation->comparison.diffcost) : json();
        return out;
    }

    /// Removes the session and cancels an in-flight planner call.
    void remove(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw NotFound("unknown session '" + id + "'");
        it->second->stop.request_stop();
        sessions_.erase(it);
    }

private:
    struct Entry {
        std::stop_source stop;
        std::mutex ask_mu;
        std::shared_mutex tree_mu;
        Session session;
    };

    std::string insert(std::shared_ptr<Entry> e) {
        std::lock_guard lock(mu_);
        while (sessions_.count(e->session.id))
            e->session.id = detail::random_id();
        std::string id = e->session.id;
        sessions_.emplace(id, std::move(e));
        return id;
    }

    std::shared_ptr<Entry> find(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw NotFound("unknown session '" + id + "'");
        return it->second;
    }

    PlannerConfig default_planner_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

} // namespace xaip
