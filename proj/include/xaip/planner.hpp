#pragma once

#include "xaip/compiler.hpp"
#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/model.hpp"
#include "xaip/plan.hpp"
#include "xaip/printer.hpp"
#include "xaip/validator.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace xaip {

enum class PlannerMode { builtin, external };

struct BuiltinLimits {
    std::size_t max_expanded_states = 2'000'000;
    std::size_t max_objects = 64;

    bool operator==(const BuiltinLimits&) const = default;
};

struct PlannerConfig {
    PlannerMode mode = PlannerMode::builtin;
    /// Shell command template; `{domain}`, `{problem}` and `{plan}` are
    /// replaced with quoted file paths.
    std::string command;
    /// Seconds.
    double timeout = 60;
    std::string output_format = "timed-plan-lines";
    BuiltinLimits builtin;

    bool operator==(const PlannerConfig&) const = default;

    void check() const {
        if (mode == PlannerMode::external && command.empty())
            throw UsageError("external planner mode requires a command");
        if (!(timeout > 0))
            throw UsageError("planner timeout must be positive");
        if (output_format != "timed-plan-lines")
            throw UsageError("unsupported planner output format '" + output_format + "'");
    }
};

enum class PlanningStatus { plan_found, unsolvable, timeout, planner_error };

inline std::string_view to_string(PlanningStatus s) {
    switch (s) {
    case PlanningStatus::plan_found: return "plan-found";
    case PlanningStatus::unsolvable: return "unsolvable";
    case PlanningStatus::timeout: return "timeout";
    case PlanningStatus::planner_error: return "planner-error";
    }
    return "";
}

inline std::optional<PlanningStatus> parse_planning_status(std::string_view s) {
    for (auto st : {PlanningStatus::plan_found, PlanningStatus::unsolvable, PlanningStatus::timeout,
                    PlanningStatus::planner_error})
        if (s == to_string(st))
            return st;
    return std::nullopt;
}

struct PlanningOutcome {
    PlanningStatus status = PlanningStatus::planner_error;
    std::optional<TimedPlan> plan;
    std::string planner_log;

    bool operator==(const PlanningOutcome&) const = default;
};

// ---------------------------------------------------------------------------
// Builtin planner
// ---------------------------------------------------------------------------

struct BuiltinOptions {
    BuiltinLimits limits;
    /// No action may start before this time (used for projected models so
    /// that nothing coincides with the replaced action's start).
    decimal earliest_start;
    /// Wall-clock budget in seconds; <= 0 means unlimited.
    double time_budget = 0;
};

namespace detail {

class Bits {
public:
    Bits() = default;
    explicit Bits(std::size_t n) : words_((n + 63) / 64, 0) {}

    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
    bool intersects(const Bits& o) const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & o.words_[k])
                return true;
        return false;
    }
    void merge(const Bits& o) {
        for (std::size_t k = 0; k < words_.size(); ++k)
            words_[k] |= o.words_[k];
    }
    bool none() const {
        return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
    }
    void append_to(std::string& key) const {
        key.append(reinterpret_cast<const char*>(words_.data()), words_.size() * sizeof(std::uint64_t));
    }

private:
    std::vector<std::uint64_t> words_;
};

using FactIds = std::vector<std::size_t>;

struct IndexedEvent {
    FactIds cond, add, del;
    Bits touched;
};

struct IndexedOp {
    GroundAction action;
    IndexedEvent start, end;
    FactIds over_all;
    Bits over_all_bits;
};

struct IndexedTil {
    decimal time;
    IndexedEvent event;
};

class BuiltinPlanner {
public:
    BuiltinPlanner(const Model& model, BuiltinOptions opts) : model_(model), opts_(opts) {}

    PlanningOutcome run(std::stop_token stop) {
        auto t0 = std::chrono::steady_clock::now();
        std::size_t objects = model_.all_objects().size();
        if (objects > opts_.limits.max_objects)
            return {PlanningStatus::planner_error, std::nullopt,
                    "builtin planner: " + std::to_string(objects) + " objects exceed the limit of " +
                        std::to_string(opts_.limits.max_objects)};
        ground();
        std::ostringstream log;
        log << "builtin planner: " << ops_.size() << " ground actions, " << facts_.size() << " facts\n";

        Node root;
        root.facts = Bits(facts_.size());
        for (const auto& a : model_.problem.init)
            root.facts.set(fact(a));
        root.touched = Bits(facts_.size());
        push(std::move(root));

        std::size_t expanded = 0;
        while (!open_.empty()) {
            std::size_t id = open_.top().node;
            open_.pop();
            if (is_goal(nodes_[id])) {
                log << "expanded " << expanded << " states\n";
                return {PlanningStatus::plan_found, extract(id), log.str()};
            }
            if (++expanded > opts_.limits.max_expanded_states) {
                log << "state limit of " << opts_.limits.max_expanded_states << " expansions reached at h="
                    << nodes_[id].h << " t=" << nodes_[id].now << " nodes=" << nodes_.size() << "\n";
                return {PlanningStatus::timeout, std::nullopt, log.str()};
            }
            if ((expanded & 255) == 0) {
                if (stop.stop_requested()) {
                    log << "cancelled after " << expanded << " expansions\n";
                    return {PlanningStatus::timeout, std::nullopt, log.str()};
                }
                double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (opts_.time_budget > 0 && secs > opts_.time_budget) {
                    log << "time budget exhausted after " << expanded << " expansions\n";
                    return {PlanningStatus::timeout, std::nullopt, log.str()};
                }
            }
            expand(id);
        }
        log << "search space exhausted after " << expanded << " expansions\n";
        return {PlanningStatus::unsolvable, std::nullopt, log.str()};
    }

private:
    struct Running {
        std::size_t op;
        decimal end;
        auto operator<=>(const Running&) const = default;
    };

    struct Node {
        Bits facts;
        decimal now;
        std::vector<Running> running;
        std::size_t til = 0;
        /// Facts checked, added or deleted by events at `now`.
        Bits touched;
        std::optional<std::size_t> parent;
        std::optional<std::size_t> started;
        std::size_t h = 0;
        std::int64_t estimate = 0;
    };

    struct OpenEntry {
        std::size_t h;
        std::int64_t estimate;
        decimal now;
        std::string last;
        std::size_t node;
        bool operator>(const OpenEntry& o) const {
            return std::tie(h, estimate, now, last, node) > std::tie(o.h, o.estimate, o.now, o.last, o.node);
        }
    };

    std::size_t fact(const Atom& a) {
        auto [it, inserted] = fact_ids_.try_emplace(a, facts_.size());
        if (inserted)
            facts_.push_back(a);
        return it->second;
    }

    FactIds ids(const std::vector<Atom>& atoms) {
        FactIds out;
        for (const auto& a : atoms)
            out.push_back(fact(a));
        return out;
    }

    void ground() {
        std::set<std::string> dynamic;
        for (const auto& a : model_.domain.actions)
            for (const auto& e : a.effects)
                dynamic.insert(e.atom.predicate);
        for (const auto& t : model_.problem.tils)
            dynamic.insert(t.atom.predicate);
        std::set<Atom> init(model_.problem.init.begin(), model_.problem.init.end());
        for (const auto& a : model_.problem.init)
            fact(a);
        for (const auto& g : model_.problem.goal)
            goal_.push_back(fact(g));
        for (const auto& schema : model_.domain.actions) {
            for (const auto& args : groundings(model_, schema.parameters)) {
                Binding b = bind(schema, args);
                bool ok = true;
                for (const auto& c : schema.conditions)
                    if (!dynamic.count(c.atom.predicate) && !init.count(substitute(c.atom, b))) {
                        ok = false;
                        break;
                    }
                if (!ok)
                    continue;
                GroundAction g;
                try {
                    g = ground_action(model_, schema.name, args);
                } catch (const UsageError&) {
                    continue;
                }
                GroundOp op = instantiate(model_, g);
                IndexedOp io;
                io.action = g;
                io.start = {ids(op.start_cond), ids(op.start_add), ids(op.start_del), {}};
                io.end = {ids(op.end_cond), ids(op.end_add), ids(op.end_del), {}};
                io.over_all = ids(op.over_all);
                ops_.push_back(std::move(io));
            }
        }
        for (const auto& t : model_.problem.tils) {
            IndexedTil it{t.time, {}};
            (t.negated ? it.event.del : it.event.add).push_back(fact(t.atom));
            tils_.push_back(std::move(it));
        }
        std::stable_sort(tils_.begin(), tils_.end(), [](const IndexedTil& a, const IndexedTil& b) { return a.time < b.time; });
        auto finish = [&](IndexedEvent& e) {
            e.touched = Bits(facts_.size());
            for (const auto* v : {&e.cond, &e.add, &e.del})
                for (auto f : *v)
                    e.touched.set(f);
        };
        for (auto& o : ops_) {
            finish(o.start);
            finish(o.end);
            o.over_all_bits = Bits(facts_.size());
            for (auto f : o.over_all)
                o.over_all_bits.set(f);
        }
        for (auto& t : tils_)
            finish(t.event);
    }

    std::size_t heuristic(const Bits& facts) const {
        std::size_t h = 0;
        for (auto g : goal_)
            if (!facts.test(g))
                ++h;
        return h;
    }

    static constexpr std::int64_t unreachable = std::numeric_limits<std::int64_t>::max() / 4;

    /// Additive delete-relaxation estimate of the remaining duration (in
    /// ticks), used to break ties between states with the same number of
    /// unsatisfied goals. Facts promised by running actions and pending
    /// timed literals count as reached.
    std::int64_t estimate(const Node& n) {
        auto& cost = cost_scratch_;
        cost.assign(facts_.size(), unreachable);
        for (std::size_t f = 0; f < facts_.size(); ++f)
            if (n.facts.test(f))
                cost[f] = 0;
        for (const auto& r : n.running)
            for (auto f : ops_[r.op].end.add)
                cost[f] = 0;
        for (std::size_t t = n.til; t < tils_.size(); ++t)
            for (auto f : tils_[t].event.add)
                cost[f] = 0;
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& op : ops_) {
                std::int64_t c = op.action.duration.ticks();
                for (const auto* pre : {&op.start.cond, &op.over_all})
                    for (auto f : *pre)
                        c = std::min(unreachable, c + cost[f]);
                if (c >= unreachable)
                    continue;
                for (const auto* adds : {&op.start.add, &op.end.add})
                    for (auto f : *adds)
                        if (c < cost[f]) {
                            cost[f] = c;
                            changed = true;
                        }
            }
        }
        std::int64_t total = 0;
        for (auto g : goal_)
            total = std::min(unreachable, total + cost[g]);
        return total;
    }

    std::string key(const Node& n) const {
        std::string k;
        n.facts.append_to(k);
        n.touched.append_to(k);
        auto put = [&](std::int64_t v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
        put(static_cast<std::int64_t>(n.til));
        if (n.til < tils_.size() || n.now < opts_.earliest_start)
            put(n.now.ticks());
        for (const auto& r : n.running) {
            put(static_cast<std::int64_t>(r.op));
            put((r.end - n.now).ticks());
        }
        return k;
    }

    void push(Node n) {
        n.h = heuristic(n.facts);
        if (!closed_.insert(key(n)).second)
            return;
        n.estimate = estimate(n);
        if (n.estimate >= unreachable)
            return;
        std::string last = n.started ? ops_[*n.started].action.signature() : std::string();
        nodes_.push_back(std::move(n));
        const Node& stored = nodes_.back();
        open_.push({stored.h, stored.estimate, stored.now, std::move(last), nodes_.size() - 1});
    }

    static bool holds_all(const Bits& facts, const FactIds& ids) {
        return std::all_of(ids.begin(), ids.end(), [&](std::size_t f) { return facts.test(f); });
    }

    static bool common(const FactIds& a, const FactIds& b) {
        for (auto x : a)
            if (std::find(b.begin(), b.end(), x) != b.end())
                return true;
        return false;
    }

    /// The validator's mutex rule for two distinct events at one instant.
    static bool interfere(const IndexedEvent& x, const IndexedEvent& y) {
        return common(x.del, y.add) || common(x.del, y.cond) || common(x.del, y.del) || common(y.del, x.add) ||
               common(y.del, x.cond) || common(x.add, y.add);
    }

    std::optional<decimal> next_event(const Node& n) const {
        std::optional<decimal> t;
        for (const auto& r : n.running)
            if (!t || r.end < *t)
                t = r.end;
        if (n.til < tils_.size() && (!t || tils_[n.til].time < *t))
            t = tils_[n.til].time;
        return t;
    }

    void expand(std::size_t id) {
        const Node cur = nodes_[id];
        std::optional<decimal> next = next_event(cur);
        // Start an action now.
        bool blocked_by_events = false;
        if (cur.now >= opts_.earliest_start) {
            for (std::size_t o = 0; o < ops_.size(); ++o) {
                const IndexedOp& op = ops_[o];
                if (!holds_all(cur.facts, op.start.cond))
                    continue;
                if (std::any_of(cur.running.begin(), cur.running.end(), [&](const Running& r) { return r.op == o; }))
                    continue;
                if (op.start.touched.intersects(cur.touched)) {
                    blocked_by_events = true;
                    continue;
                }
                Node n = cur;
                for (auto f : op.start.del)
                    n.facts.reset(f);
                for (auto f : op.start.add)
                    n.facts.set(f);
                n.running.push_back({o, cur.now + op.action.duration});
                std::sort(n.running.begin(), n.running.end());
                bool ok = true;
                for (const auto& r : n.running)
                    if (!holds_all(n.facts, ops_[r.op].over_all)) {
                        ok = false;
                        break;
                    }
                if (!ok)
                    continue;
                n.touched.merge(op.start.touched);
                n.parent = id;
                n.started = o;
                push(std::move(n));
            }
        }
        // Let time pass without an event so that interfering actions can start.
        decimal target = cur.now < opts_.earliest_start ? opts_.earliest_start : cur.now + epsilon;
        bool want_wait = cur.now < opts_.earliest_start || blocked_by_events;
        if (want_wait && (!next || target < *next)) {
            Node n = cur;
            n.now = target;
            n.touched = Bits(facts_.size());
            n.parent = id;
            n.started.reset();
            push(std::move(n));
        }
        // Advance to the next action end or timed literal.
        if (next) {
            Node n = cur;
            n.now = *next;
            n.touched = Bits(facts_.size());
            n.parent = id;
            n.started.reset();
            std::vector<const IndexedEvent*> events;
            std::vector<Running> still;
            for (const auto& r : cur.running) {
                if (r.end == *next)
                    events.push_back(&ops_[r.op].end);
                else
                    still.push_back(r);
            }
            while (n.til < tils_.size() && tils_[n.til].time == *next)
                events.push_back(&tils_[n.til++].event);
            if (!apply_events(n, events))
                return;
            n.running = std::move(still);
            for (const auto& r : n.running)
                if (!holds_all(n.facts, ops_[r.op].over_all))
                    return;
            push(std::move(n));
        }
    }

    /// Applies simultaneous end/TIL events; false on mutex or an unmet end
    /// condition.
    bool apply_events(Node& n, const std::vector<const IndexedEvent*>& events) const {
        for (std::size_t i = 0; i < events.size(); ++i)
            for (std::size_t j = i + 1; j < events.size(); ++j)
                if (interfere(*events[i], *events[j]))
                    return false;
        for (const auto* e : events)
            if (!holds_all(n.facts, e->cond))
                return false;
        for (const auto* e : events)
            for (auto f : e->del)
                n.facts.reset(f);
        for (const auto* e : events) {
            for (auto f : e->add)
                n.facts.set(f);
            n.touched.merge(e->touched);
        }
        return true;
    }

    bool is_goal(const Node& n) const {
        if (!n.running.empty())
            return false;
        Node rest = n;
        while (rest.til < tils_.size()) {
            decimal t = tils_[rest.til].time;
            std::vector<const IndexedEvent*> events;
            while (rest.til < tils_.size() && tils_[rest.til].time == t)
                events.push_back(&tils_[rest.til++].event);
            if (!apply_events(rest, events))
                return false;
        }
        return heuristic(rest.facts) == 0;
    }

    TimedPlan extract(std::size_t id) const {
        TimedPlan plan;
        for (std::optional<std::size_t> cur = id; cur; cur = nodes_[*cur].parent) {
            const Node& n = nodes_[*cur];
            if (n.started)
                plan.steps.push_back({n.now, ops_[*n.started].action, ops_[*n.started].action.duration});
        }
        std::reverse(plan.steps.begin(), plan.steps.end());
        return plan;
    }

    const Model& model_;
    BuiltinOptions opts_;
    std::map<Atom, std::size_t> fact_ids_;
    std::vector<Atom> facts_;
    FactIds goal_;
    std::vector<IndexedOp> ops_;
    std::vector<IndexedTil> tils_;
    std::vector<Node> nodes_;
    std::unordered_set<std::string> closed_;
    std::vector<std::int64_t> cost_scratch_;
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open_;
};

} // namespace detail

/// Decision-epoch forward search: start applicable actions at the current
/// time, or advance to the next action end or timed literal. Greedy on the
/// number of unsatisfied goal literals, then earlier time, then action name.
inline PlanningOutcome builtin_plan(const Model& model, BuiltinOptions opts = {}, std::stop_token stop = {}) {
    return detail::BuiltinPlanner(model, opts).run(stop);
}

inline PlanningOutcome builtin_plan(const Domain& domain, const Problem& problem, BuiltinLimits limits) {
    return builtin_plan(Model{domain, problem}, BuiltinOptions{limits, decimal{}, 0});
}

// ---------------------------------------------------------------------------
// External planner
// ---------------------------------------------------------------------------

namespace detail {

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

inline std::string substitute_placeholders(std::string cmd, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        std::string token = "{" + key + "}";
        for (std::size_t pos = cmd.find(token); pos != std::string::npos; pos = cmd.find(token, pos + value.size())) {
            cmd.replace(pos, token.size(), value);
        }
    }
    return cmd;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::filesystem::path make_scratch_dir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "xaip-plan-XXXXXX").string();
    if (!mkdtemp(tmpl.data()))
        throw Error("cannot create scratch directory under " + std::filesystem::temp_directory_path().string());
    return tmpl;
}

/// First block of consecutive plan lines in `text` that parses against the
/// model.
inline std::optional<TimedPlan> extract_plan(const std::string& text, const Model& model) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> block;
    auto flush = [&]() -> std::optional<TimedPlan> {
        if (block.empty())
            return std::nullopt;
        std::string joined;
        for (const auto& l : block)
            joined += l + "\n";
        block.clear();
        try {
            return parse_plan(joined, model);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    while (std::getline(in, line)) {
        std::string_view body = strip_comment(line);
        if (!blank(body) && split_plan_line(body)) {
            block.push_back(std::string(body));
            continue;
        }
        if (auto p = flush())
            return p;
    }
    return flush();
}

inline bool mentions_unsolvable(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* marker : {"unsolvable", "no solution", "no plan", "goal can be simplified to false"})
        if (text.find(marker) != std::string::npos)
            return true;
    return false;
}

} // namespace detail

/// Runs an external planner on the model's printed files. The process runs
/// in its own process group, which is killed on timeout or cancellation.
inline PlanningOutcome external_plan(const Model& model, const PlannerConfig& config, std::stop_token stop = {}) {
    namespace fs = std::filesystem;
    config.check();
    fs::path dir = detail::make_scratch_dir();
    auto [domain_text, problem_text] = print_model(model);
    fs::path domain = dir / "domain.pddl", problem = dir / "problem.pddl", plan_file = dir / "plan.txt";
    fs::path out_file = dir / "stdout.txt", err_file = dir / "stderr.txt";
    std::ofstream(domain) << domain_text;
    std::ofstream(problem) << problem_text;
    // A bare command gets the two files appended, as most planners expect.
    std::string templ = config.command;
    if (templ.find("{domain}") == std::string::npos && templ.find("{problem}") == std::string::npos)
        templ += " {domain} {problem}";
    std::string cmd = detail::substitute_placeholders(templ, {{"domain", detail::shell_quote(domain.string())},
                                                                       {"problem", detail::shell_quote(problem.string())},
                                                                       {"plan", detail::shell_quote(plan_file.string())}});
    PlanningOutcome outcome;
    std::ostringstream log;
    log << "command: " << cmd << "\nscratch: " << dir.string() << "\n";

    pid_t pid = fork();
    if (pid < 0)
        throw Error("fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        int out = open(out_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int err = open(err_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int null_in = open("/dev/null", O_RDONLY);
        if (out < 0 || err < 0 || null_in < 0)
            _exit(127);
        dup2(null_in, 0);
        dup2(out, 1);
        dup2(err, 2);
        if (chdir(dir.c_str()) != 0)
            _exit(127);
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(config.timeout);
    int status = 0;
    bool finished = false, timed_out = false, cancelled = false;
    for (;;) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            finished = true;
            break;
        }
        if (stop.stop_requested()) {
            cancelled = true;
            break;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    // Always clear the process group: planners may leave helpers behind.
    kill(-pid, SIGKILL);
    if (!finished)
        waitpid(pid, &status, 0);

    std::string out = detail::slurp(out_file), err = detail::slurp(err_file);
    log << "--- stdout ---\n" << out << "--- stderr ---\n" << err;
    auto fail = [&](PlanningStatus s, const std::string& why) {
        log << "--- outcome ---\n" << why << "\nscratch directory kept: " << dir.string() << "\n";
        return PlanningOutcome{s, std::nullopt, log.str()};
    };
    if (timed_out)
        return fail(PlanningStatus::timeout, "planner timed out after " + std::to_string(config.timeout) + " s");
    if (cancelled)
        return fail(PlanningStatus::timeout, "planner cancelled");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        std::string why = WIFEXITED(status) ? "planner exited with status " + std::to_string(WEXITSTATUS(status))
                                            : "planner terminated by signal " + std::to_string(WTERMSIG(status));
        return fail(PlanningStatus::planner_error, why);
    }
    std::optional<TimedPlan> plan = detail::extract_plan(out, model);
    if (!plan) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name != "stdout.txt" && name != "stderr.txt" && name != "domain.pddl" &&
                name != "problem.pddl")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            if ((plan = detail::extract_plan(detail::slurp(f), model))) {
                log << "plan read from " << f.filename().string() << "\n";
                break;
            }
    }
    if (!plan) {
        if (detail::mentions_unsolvable(out + "\n" + err))
            return fail(PlanningStatus::unsolvable, "planner reported no solution");
        return fail(PlanningStatus::planner_error, "no parseable plan in planner output");
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return {PlanningStatus::plan_found, std::move(plan), log.str()};
}

/// Plans for an HModel. A plan-found outcome is always valid for the
/// HModel; a planner plan that fails validation is reported as
/// planner-error with the validator's reason.
inline PlanningOutcome plan(const HModel& hm, const PlannerConfig& config, std::stop_token stop = {}) {
    config.check();
    if (hm.blocked)
        return {PlanningStatus::unsolvable, std::nullopt, *hm.blocked};
    PlanningOutcome out;
    if (config.mode == PlannerMode::builtin) {
        BuiltinOptions opts{config.builtin, hm.prefix.empty() ? decimal{} : epsilon, config.timeout};
        out = builtin_plan(hm.model, opts, stop);
    } else {
        out = external_plan(hm.model, config, stop);
    }
    if (out.status == PlanningStatus::plan_found) {
        ValidationReport r = validate(hm.model, *out.plan);
        if (!r.valid) {
            out.planner_log += "\nplan rejected by the validator: " + r.failure->detail + "\n";
            out.status = PlanningStatus::planner_error;
            out.plan.reset();
        }
    }
    return out;
}

inline PlanningOutcome plan(const Model& model, const PlannerConfig& config, std::stop_token stop = {}) {
    return plan(root_hmodel(model), config, stop);
}

} // namespace xaip
