#include "alarm2action/http_api.hpp"

#include <httplib.h>

#include "alarm2action/errors.hpp"

namespace a2a {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
    send_json(res, http_status_for(code), {{"error", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
    }
}

int path_int(const httplib::Request& req, std::size_t group) {
    try {
        return std::stoi(req.matches[static_cast<int>(group)].str());
    } catch (const std::exception&) {
        throw ValidationError("turbine id out of range");
    }
}

std::size_t query_size(const httplib::Request& req, const char* name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used != v.size() || n < 1) throw std::invalid_argument(name);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ValidationError(std::string(name) + " must be a positive integer");
    }
}

FeedbackRecord feedback_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("feedback must be an object");
    FeedbackRecord fb;
    try {
        fb.recommendation_id = j.at("recommendation_id").get<std::string>();
        fb.rating = j.at("rating").get<int>();
        const auto verdict = j.at("verdict").get<std::string>();
        if (verdict == "accept") fb.verdict = Verdict::accept;
        else if (verdict == "reject") fb.verdict = Verdict::reject;
        else throw ValidationError("verdict must be accept or reject");
        if (j.contains("corrected_label") && !j["corrected_label"].is_null())
            fb.corrected_label = j["corrected_label"].get<std::string>();
        fb.actor = j.value("actor", std::string());
        if (j.contains("at") && !j["at"].is_null()) {
            const auto at = parse_timestamp(j["at"].get<std::string>());
            if (!at) throw ValidationError("invalid timestamp in 'at'");
            fb.at = *at;
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad feedback: ") + e.what());
    }
    return fb;
}

std::vector<RawAlarm> alarms_from_json(const json& j) {
    const json& list = j.is_array() ? j : j.contains("events") ? j["events"] : json();
    if (!list.is_array()) throw ValidationError("expected an array of events or {\"events\": [...]}");
    std::vector<RawAlarm> out;
    for (const auto& e : list) {
        RawAlarm a;
        if (e.is_object()) {
            if (e.contains("time_on") && e["time_on"].is_string()) a.time_on = e["time_on"].get<std::string>();
            if (e.contains("text") && e["text"].is_string()) a.text = e["text"].get<std::string>();
        }
        out.push_back(std::move(a));
    }
    return out;
}

RetrainPolicy policy_override(const json& body, RetrainPolicy p) {
    if (!body.contains("policy")) return p;
    const auto& j = body["policy"];
    if (!j.is_object()) throw ValidationError("policy must be an object");
    try {
        p.rating_threshold = j.value("rating_threshold", p.rating_threshold);
        p.min_new_examples = j.value("min_new_examples", p.min_new_examples);
        p.acceptance_target = j.value("acceptance_target", p.acceptance_target);
        p.accept_window = j.value("accept_window", p.accept_window);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad policy: ") + e.what());
    }
    return p;
}

}  // namespace

int http_status_for(const std::string& code) {
    if (code == "ValidationError" || code == "InvalidArgument") return 400;
    if (code == "Unauthorized") return 401;
    if (code == "UnknownRecommendation" || code == "NoAlarmsInWindow" || code == "NotFound") return 404;
    if (code == "AlreadyResolved" || code == "RetrainInProgress") return 409;
    if (code == "MissingCorrection" || code == "InsufficientData") return 422;
    if (code == "NoModelLoaded") return 503;
    return 500;
}

struct HttpApi::Impl {
    RecommendationService& service;
    httplib::Server server;

    explicit Impl(RecommendationService& s) : service(s) {}

    template <typename F>
    httplib::Server::Handler wrap(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const std::exception& e) {
                send_error(res, "InternalError", e.what());
            }
        };
    }

    void routes() {
        const auto& cfg = service.config();
        const std::string token = cfg.api_token;
        server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
            if (token.empty() || req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
            if (req.get_header_value("X-Api-Token") == token) return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, "Unauthorized", "missing or wrong X-Api-Token");
            return httplib::Server::HandlerResponse::Handled;
        });

        server.Post(R"(/api/v1/turbines/(-?\d+)/alarms)", wrap([this](const auto& req, auto& res) {
                        const int turbine = path_int(req, 1);
                        send_json(res, 200, to_json(service.submit_alarms(turbine, alarms_from_json(parse_body(req)))));
                    }));

        server.Get(R"(/api/v1/turbines/(-?\d+)/recommendations)", wrap([this](const auto& req, auto& res) {
                       const int turbine = path_int(req, 1);
                       const auto k = query_size(req, "k", service.config().top_k);
                       send_json(res, 200, json::array({to_json(service.get_recommendations(turbine, k))}));
                   }));

        server.Get("/api/v1/recommendations", wrap([this](const auto& req, auto& res) {
                       std::optional<RecommendationStatus> status;
                       if (req.has_param("status")) status = status_from_string(req.get_param_value("status"));
                       const auto limit = query_size(req, "limit", 50);
                       json out = json::array();
                       for (const auto& r : service.list_recommendations(status, limit)) out.push_back(to_json(r));
                       send_json(res, 200, out);
                   }));

        server.Get(R"(/api/v1/recommendations/([A-Za-z0-9-]+))", wrap([this](const auto& req, auto& res) {
                       send_json(res, 200, to_json(service.get_recommendation(req.matches[1].str())));
                   }));

        server.Post("/api/v1/feedback", wrap([this](const auto& req, auto& res) {
                        send_json(res, 200, to_json(service.submit_feedback(feedback_from_json(parse_body(req)))));
                    }));

        server.Post("/api/v1/retrain", wrap([this](const auto& req, auto& res) {
                        const auto policy = policy_override(parse_body(req), service.config().policy);
                        send_json(res, 202, to_json(service.trigger_retrain(policy)));
                    }));

        server.Get("/api/v1/status", wrap([this](const auto&, auto& res) {
                       send_json(res, 200, to_json(service.status()));
                   }));

        server.Get("/api/v1/events", wrap([this](const auto& req, auto& res) {
                       const auto limit = query_size(req, "limit", 50);
                       json out = json::array();
                       for (const auto& [kind, detail] : service.storage().events(limit)) {
                           json d = json::parse(detail, nullptr, false);
                           out.push_back({{"kind", kind}, {"detail", d.is_discarded() ? json(detail) : d}});
                       }
                       send_json(res, 200, out);
                   }));

        if (!cfg.static_dir.empty()) {
            if (!server.set_mount_point("/", cfg.static_dir.string()))
                throw Error("IoError", "static_dir does not exist: " + cfg.static_dir.string());
        }
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.status == 404 && res.body.empty()) send_error(res, "NotFound", "no route for " + req.path);
        });
    }
};

HttpApi::HttpApi(RecommendationService& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpApi::~HttpApi() { stop(); }

bool HttpApi::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpApi::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpApi::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpApi::wait_until_ready() { impl_->server.wait_until_ready(); }

void HttpApi::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace a2a
