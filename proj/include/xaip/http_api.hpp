#pragma once

#include "xaip/session.hpp"

#include <httplib.h>

#include <functional>

namespace xaip {

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline json error_body(std::string_view kind, const std::string& message, json detail = nullptr) {
    json j = {{"error", std::string(kind)}, {"message", message}};
    if (!detail.is_null())
        j["detail"] = std::move(detail);
    return j;
}

/// Maps library errors onto status codes: malformed requests 400, unknown
/// ids 404, concurrent asks 409, rejected questions, models and plans 422.
inline void guarded(httplib::Response& res, const std::function<void()>& body) {
    try {
        body();
    } catch (const NotFound& e) {
        send_json(res, 404, error_body("not_found", e.what()));
    } catch (const Busy& e) {
        send_json(res, 409, error_body("busy", e.what()));
    } catch (const SchemaError& e) {
        send_json(res, 400, error_body("malformed", e.what()));
    } catch (const Rejected& e) {
        send_json(res, 422, error_body("rejected", e.what(), e.detail));
    } catch (const CompilationError& e) {
        send_json(res, 422, error_body("compilation", e.what()));
    } catch (const SyntaxError& e) {
        send_json(res, 422, error_body("syntax", e.what(), {{"line", e.pos.line}, {"column", e.pos.column}}));
    } catch (const UnsupportedConstruct& e) {
        send_json(res, 422,
                  error_body("unsupported", e.what(), {{"construct", e.construct}, {"line", e.pos.line}}));
    } catch (const SemanticError& e) {
        send_json(res, 422, error_body("semantic", e.what()));
    } catch (const UsageError& e) {
        send_json(res, 422, error_body("usage", e.what()));
    } catch (const InternalError& e) {
        send_json(res, 500, error_body("internal", e.what()));
    } catch (const std::exception& e) {
        send_json(res, 500, error_body("internal", e.what()));
    }
}

inline json parse_body(const httplib::Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw SchemaError("request body must be a JSON object");
    return j;
}

} // namespace detail

/// Registers the session API on `server`.
inline void register_routes(httplib::Server& server, SessionService& service) {
    using detail::guarded;
    using detail::send_json;

    server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json body = detail::parse_body(req);
            std::optional<std::string> plan;
            if (const json* p = detail::optional_field(body, "plan"))
                plan = detail::string_value(*p, "plan");
            std::optional<PlannerConfig> config;
            if (const json* c = detail::optional_field(body, "planner"))
                config = planner_config_from_json(*c, service.default_planner());
            std::string domain = detail::string_field(body, "domain");
            std::string problem = detail::string_field(body, "problem");
            if (config) {
                try {
                    config->check();
                } catch (const UsageError& e) {
                    throw SchemaError(e.what());
                }
            }
            std::string id = service.create(domain, problem, plan, config);
            send_json(res, 201, {{"session", id}, {"tree", service.tree(id)}});
        });
    });

    server.Get(R"(/sessions/([^/]+)/tree)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.tree(req.matches[1])); });
    });

    server.Get(R"(/sessions/([^/]+)/nodes/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.node(req.matches[1], req.matches[2])); });
    });

    server.Post(R"(/sessions/([^/]+)/nodes/([^/]+)/ask)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json body = detail::parse_body(req);
            send_json(res, 201, service.ask(req.matches[1], req.matches[2], body));
        });
    });

    server.Get(R"(/sessions/([^/]+)/ground-actions)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!req.has_param("schema"))
                throw SchemaError("missing query parameter 'schema'");
            send_json(res, 200, service.ground(req.matches[1], req.get_param_value("schema")));
        });
    });

    server.Delete(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            service.remove(req.matches[1]);
            res.status = 204;
        });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty())
            send_json(res, res.status, detail::error_body(res.status == 404 ? "not_found" : "error",
                                                          "no route for this request"));
    });
}

} // namespace xaip
