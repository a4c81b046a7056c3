#include "xaip/http_api.hpp"
#include "xaip/xaip.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace xaip;

namespace {

/// Exit codes shared by all subcommands.
enum Exit { ok = 0, rejected = 1, usage = 2 };

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out || !(out << text))
        throw UsageError("cannot write " + path);
}

json read_json(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded())
        throw SchemaError(path + " is not well-formed JSON");
    return j;
}

/// `--planner` wins, then XAIP_PLANNER, then the builtin planner. The
/// word "builtin" selects the builtin planner explicitly.
struct PlannerOptions {
    std::string command;
    std::optional<double> timeout;

    void add(CLI::App* app) {
        app->add_option("--planner", command, "External planner command template ({domain} {problem} {plan}), or 'builtin'");
        app->add_option("--timeout", timeout, "Planner timeout in seconds")->check(CLI::PositiveNumber);
    }

    PlannerConfig config(PlannerConfig base = {}, bool from_env = true) const {
        std::string cmd = command;
        if (cmd.empty() && from_env)
            if (const char* env = std::getenv("XAIP_PLANNER"))
                cmd = env;
        if (cmd == "builtin") {
            base.mode = PlannerMode::builtin;
        } else if (!cmd.empty()) {
            base.mode = PlannerMode::external;
            base.command = cmd;
        }
        if (timeout)
            base.timeout = *timeout;
        return base;
    }
};

void print_steps(std::ostream& os, const char* title, const std::vector<PlanStep>& steps) {
    os << title << " (" << steps.size() << "):\n";
    for (const auto& s : steps)
        os << "  " << s.to_string() << "\n";
}

void print_comparison(std::ostream& os, const Comparison& c) {
    print_steps(os, "existing", c.existing);
    print_steps(os, "removed", c.removed);
    print_steps(os, "added", c.added);
    os << "diffcost: " << c.diffcost << "\n";
}

void print_report(std::ostream& os, const ValidationReport& r) {
    if (r.valid) {
        os << "Plan valid\nCost: " << r.cost << "\n";
        return;
    }
    const Failure& f = *r.failure;
    os << "Plan invalid\nFailure at " << f.time << ": " << to_string(f.reason);
    if (f.literal)
        os << " " << f.literal->to_string();
    os << "\n" << f.detail << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explainable planning toolchain: validate plans, ask contrastive questions, serve sessions"};
    app.require_subcommand(1);
    bool as_json = false;

    // validate
    std::string domain, problem, plan_file;
    auto* validate_cmd = app.add_subcommand("validate", "Validate a plan (exit 0 valid, 1 invalid, 2 usage error)");
    validate_cmd->add_option("--domain", domain)->required();
    validate_cmd->add_option("--problem", problem)->required();
    validate_cmd->add_option("--plan", plan_file)->required();
    validate_cmd->add_flag("--json", as_json, "Print the report as JSON");

    // plan
    PlannerOptions planner;
    std::string out_file;
    auto* plan_cmd = app.add_subcommand("plan", "Run the configured planner (exit 0 plan found, 1 otherwise)");
    plan_cmd->add_option("--domain", domain)->required();
    plan_cmd->add_option("--problem", problem)->required();
    plan_cmd->add_option("--out", out_file, "Write the plan here instead of stdout");
    planner.add(plan_cmd);

    // compile-question
    std::string question_file, session_file, node_id = "n0", out_domain, out_problem;
    auto* compile_cmd = app.add_subcommand("compile-question", "Compile a question into a hypothetical model");
    compile_cmd->add_option("--question", question_file)->required();
    compile_cmd->add_option("--domain", domain);
    compile_cmd->add_option("--problem", problem);
    compile_cmd->add_option("--plan", plan_file, "Plan the question refers to (needed for replace_in_state)");
    compile_cmd->add_option("--session", session_file, "Compile onto a session node instead");
    compile_cmd->add_option("--node", node_id, "Session node (default n0)");
    compile_cmd->add_option("--out-domain", out_domain, "Write the HModel domain here");
    compile_cmd->add_option("--out-problem", out_problem, "Write the HModel problem here");

    // ask
    std::string save_to;
    auto* ask_cmd = app.add_subcommand("ask", "Ask a question on a session node and save the session");
    ask_cmd->add_option("--session", session_file)->required();
    ask_cmd->add_option("--node", node_id)->required();
    ask_cmd->add_option("--question", question_file)->required();
    ask_cmd->add_option("--out", save_to, "Save the updated session here (default: overwrite --session)");
    ask_cmd->add_flag("--json", as_json, "Print the new node as JSON");
    PlannerOptions ask_planner;
    ask_planner.add(ask_cmd);

    // diff
    std::string plan_a, plan_b;
    bool dot = false;
    auto* diff_cmd = app.add_subcommand("diff", "Compare two plans");
    diff_cmd->add_option("--domain", domain)->required();
    diff_cmd->add_option("--problem", problem)->required();
    diff_cmd->add_option("--plan-a", plan_a)->required();
    diff_cmd->add_option("--plan-b", plan_b)->required();
    diff_cmd->add_flag("--dot", dot, "Print the causal-graph diff in Graphviz syntax");
    diff_cmd->add_flag("--json", as_json, "Print the comparison as JSON");

    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP JSON API");
    serve_cmd->add_option("--port", port)->required()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host, "Address to bind (default 127.0.0.1)");
    PlannerOptions serve_planner;
    serve_planner.add(serve_cmd);

    // new-session
    auto* new_cmd = app.add_subcommand("new-session", "Create a session file from a model and optional plan");
    new_cmd->add_option("--domain", domain)->required();
    new_cmd->add_option("--problem", problem)->required();
    new_cmd->add_option("--plan", plan_file, "Root plan (default: run the planner)");
    new_cmd->add_option("--out", out_file)->required();
    PlannerOptions new_planner;
    new_planner.add(new_cmd);

    // tree
    auto* tree_cmd = app.add_subcommand("tree", "Print a session's explanation tree as JSON");
    tree_cmd->add_option("--session", session_file)->required();
    std::string show_node;
    tree_cmd->add_option("--node", show_node, "Print this node in full instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*validate_cmd) {
            Model m = parse_model(read_file(domain), read_file(problem));
            TimedPlan p = parse_plan(read_file(plan_file), m);
            ValidationReport r = validate(m, p);
            if (as_json)
                std::cout << to_json(r).dump(2) << "\n";
            else
                print_report(std::cout, r);
            return r.valid ? ok : rejected;
        }
        if (*plan_cmd) {
            Model m = parse_model(read_file(domain), read_file(problem));
            PlannerConfig cfg = planner.config();
            cfg.check();
            PlanningOutcome out = xaip::plan(m, cfg);
            if (out.status != PlanningStatus::plan_found) {
                std::cerr << to_string(out.status) << "\n" << out.planner_log << "\n";
                return rejected;
            }
            std::string text = "; cost " + out.plan->cost().to_string() + "\n" + print_plan(*out.plan);
            if (out_file.empty())
                std::cout << text;
            else
                write_file(out_file, text);
            return ok;
        }
        if (*compile_cmd) {
            HModel base;
            TimedPlan p;
            Model original;
            if (!session_file.empty()) {
                Session s = load_session(session_file);
                const ExplanationNode& n = s.node(node_id);
                if (!n.plan)
                    throw CompilationError("node '" + n.id + "' has no plan");
                base = n.hmodel;
                p = *n.plan;
                original = s.model;
            } else {
                if (domain.empty() || problem.empty())
                    throw UsageError("compile-question needs --domain and --problem, or --session");
                original = parse_model(read_file(domain), read_file(problem));
                base = root_hmodel(original);
                if (!plan_file.empty())
                    p = parse_plan(read_file(plan_file), original);
            }
            FormalQuestion q = question_from_json(read_json(question_file), original);
            HModel h = compile(base, p, q);
            auto [d, pr] = print_model(h.model);
            if (!out_domain.empty())
                write_file(out_domain, d);
            if (!out_problem.empty())
                write_file(out_problem, pr);
            if (out_domain.empty() && out_problem.empty())
                std::cout << to_json(h).dump(2) << "\n";
            return ok;
        }
        if (*ask_cmd) {
            Session s = load_session(session_file);
            // The session's own planner settings apply unless overridden.
            s.planner = ask_planner.config(s.planner, false);
            s.planner.check();
            FormalQuestion q = question_from_json(read_json(question_file), s.model);
            const ExplanationNode& n = xaip::ask(s, node_id, q);
            save_session(s, save_to.empty() ? session_file : save_to);
            if (as_json) {
                std::cout << node_view(s, n).dump(2) << "\n";
                return ok;
            }
            std::cout << "node " << n.id << " (parent " << *n.parent << "): " << to_string(n.status) << "\n";
            if (n.plan) {
                std::cout << "cost: " << n.plan->cost() << "\n";
                print_comparison(std::cout, n.explanation->comparison);
                for (auto i : n.explanation->redundancy_flags)
                    std::cout << "redundant: " << n.plan->steps[i].to_string() << "\n";
            } else {
                std::cout << n.planner_log << "\n";
            }
            return ok;
        }
        if (*diff_cmd) {
            Model m = parse_model(read_file(domain), read_file(problem));
            TimedPlan a = parse_plan(read_file(plan_a), m), b = parse_plan(read_file(plan_b), m);
            if (dot) {
                std::cout << to_dot(diff_causal(causal_links(m, a), causal_links(m, b)));
                return ok;
            }
            Comparison c = compare(a, b);
            if (as_json)
                std::cout << to_json(c).dump(2) << "\n";
            else
                print_comparison(std::cout, c);
            return ok;
        }
        if (*serve_cmd) {
            PlannerConfig cfg = serve_planner.config();
            cfg.check();
            SessionService service(cfg);
            httplib::Server server;
            server.new_task_queue = [] { return new httplib::ThreadPool(8); };
            register_routes(server, service);
            static httplib::Server* running = &server;
            std::signal(SIGINT, [](int) { running->stop(); });
            std::signal(SIGTERM, [](int) { running->stop(); });
            int bound = port;
            if (port == 0)
                bound = server.bind_to_any_port(host);
            else if (!server.bind_to_port(host, port))
                throw UsageError("cannot bind " + host + ":" + std::to_string(port));
            std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
            server.listen_after_bind();
            return ok;
        }
        if (*new_cmd) {
            PlannerConfig cfg = new_planner.config();
            std::optional<std::string> plan_text;
            if (!plan_file.empty())
                plan_text = read_file(plan_file);
            Session s = create_session(read_file(domain), read_file(problem), plan_text, cfg);
            save_session(s, out_file);
            std::cout << "session " << s.id << ", root cost " << s.root().plan->cost() << "\n";
            return ok;
        }
        if (*tree_cmd) {
            Session s = load_session(session_file);
            if (show_node.empty())
                std::cout << tree_view(s).dump(2) << "\n";
            else
                std::cout << node_view(s, s.node(show_node)).dump(2) << "\n";
            return ok;
        }
    } catch (const Rejected& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rejected;
    } catch (const CompilationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rejected;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return rejected;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    }
    return usage;
}
