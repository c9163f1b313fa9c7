#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <thread>

#include "alarm2action/http_api.hpp"
#include "fixture.hpp"
#include "oracles.hpp"

using namespace a2a;
using nlohmann::json;

namespace {

const fixture::Trained& trained() {
    static const auto t = fixture::train_small();
    return t;
}

struct Running {
    std::unique_ptr<RecommendationService> svc;
    std::unique_ptr<HttpApi> api;
    std::thread thread;
    int port = -1;
    std::unique_ptr<httplib::Client> client;

    explicit Running(ServiceConfig cfg, bool with_model = true) {
        cfg.sequencer.mem_days = trained().spec.mem_days;
        cfg.sequencer.target_len = trained().seq.target_len;
        cfg.train.epochs = 10;
        svc = std::make_unique<RecommendationService>(cfg, std::make_shared<SqliteStorage>(":memory:"));
        if (with_model) svc->install_model(trained().bundle);
        svc->set_training_data(trained().split);
        api = std::make_unique<HttpApi>(*svc);
        port = api->bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { api->listen_after_bind(); });
        api->wait_until_ready();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        if (!cfg.api_token.empty()) client->set_default_headers({{"X-Api-Token", cfg.api_token}});
    }
    ~Running() {
        api->stop();
        thread.join();
        svc->wait_for_retrain();
    }

    httplib::Result post(const std::string& path, const json& body) {
        return client->Post(path, body.dump(), "application/json");
    }
};

json body(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

json events_json(const GroundTruth& g) {
    json out = json::array();
    for (const auto& a : g.cascade) out.push_back({{"time_on", format_timestamp(a.time)}, {"text", a.text}});
    return out;
}

}  // namespace

TEST_CASE("error code mapping") {
    CHECK(http_status_for("ValidationError") == 400);
    CHECK(http_status_for("Unauthorized") == 401);
    CHECK(http_status_for("UnknownRecommendation") == 404);
    CHECK(http_status_for("NoAlarmsInWindow") == 404);
    CHECK(http_status_for("AlreadyResolved") == 409);
    CHECK(http_status_for("RetrainInProgress") == 409);
    CHECK(http_status_for("MissingCorrection") == 422);
    CHECK(http_status_for("InsufficientData") == 422);
    CHECK(http_status_for("NoModelLoaded") == 503);
    CHECK(http_status_for("Whatever") == 500);
}

TEST_CASE("alarms, recommendations and feedback over HTTP") {
    Running s(ServiceConfig{});
    const auto& g = trained().corpus.ground_truth;

    auto r = s.post("/api/v1/turbines/3/alarms", {{"events", events_json(g[0])}});
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body(r)["persisted"] == g[0].cascade.size());

    r = s.post("/api/v1/turbines/3/alarms",
               json::array({{{"time_on", "not a time"}, {"text", "x"}}, {{"text", "missing time"}}}));
    CHECK(r->status == 200);
    CHECK(body(r)["errors"].size() == 2);
    CHECK(body(r)["errors"][0]["index"] == 0);

    CHECK(s.post("/api/v1/turbines/3/alarms", json{{"nope", 1}})->status == 400);
    CHECK(s.client->Post("/api/v1/turbines/3/alarms", "{bad json", "application/json")->status == 400);

    r = s.client->Get("/api/v1/turbines/3/recommendations?k=2");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto recs = body(r);
    REQUIRE(recs.is_array());
    REQUIRE(recs.size() == 1);
    const auto rec = recs[0];
    CHECK(rec["ranked"].size() == 2);
    CHECK(rec["ranked"][0]["label"] == clean_text(g[0].label));
    CHECK(rec["status"] == "pending");
    CHECK(rec["turbine_id"] == 3);
    const auto id = rec["id"].get<std::string>();

    CHECK(s.client->Get("/api/v1/turbines/4/recommendations")->status == 404);
    CHECK(body(s.client->Get("/api/v1/turbines/4/recommendations"))["error"] == "NoAlarmsInWindow");
    CHECK(s.client->Get("/api/v1/turbines/3/recommendations?k=0")->status == 400);
    CHECK(s.client->Get("/api/v1/turbines/3/recommendations?k=abc")->status == 400);

    r = s.client->Get(("/api/v1/recommendations/" + id).c_str());
    CHECK(r->status == 200);
    CHECK(body(r) == rec);
    CHECK(s.client->Get("/api/v1/recommendations/rec-777777")->status == 404);

    r = s.post("/api/v1/feedback", {{"recommendation_id", id}, {"rating", 2}, {"verdict", "reject"}});
    CHECK(r->status == 422);
    CHECK(body(r)["error"] == "MissingCorrection");
    CHECK(s.post("/api/v1/feedback", {{"recommendation_id", id}, {"rating", 2}, {"verdict", "maybe"}})->status ==
          400);
    CHECK(s.post("/api/v1/feedback", {{"recommendation_id", id}, {"rating", "two"}, {"verdict", "accept"}})->status ==
          400);
    CHECK(s.post("/api/v1/feedback", {{"recommendation_id", "rec-123456"}, {"rating", 5}, {"verdict", "accept"}})
              ->status == 404);

    const json fb{{"recommendation_id", id},
                  {"rating", 2},
                  {"verdict", "reject"},
                  {"corrected_label", "Inspect Hub"},
                  {"actor", "om"},
                  {"at", "2021-05-01T10:00:00Z"}};
    r = s.post("/api/v1/feedback", fb);
    CHECK(r->status == 200);
    CHECK(body(r)["status"] == "corrected");
    r = s.post("/api/v1/feedback", fb);
    CHECK(r->status == 409);
    CHECK(body(r)["error"] == "AlreadyResolved");

    r = s.client->Get("/api/v1/recommendations?status=corrected&limit=5");
    CHECK(r->status == 200);
    CHECK(body(r).size() == 1);
    CHECK(body(s.client->Get("/api/v1/recommendations?status=pending")).empty());
    CHECK(s.client->Get("/api/v1/recommendations?status=bogus")->status == 400);

    r = s.client->Get("/api/v1/status");
    CHECK(r->status == 200);
    const auto st = body(r);
    CHECK(st["model_version"] == 1);
    CHECK(st["buffer_size"] == 1);
    CHECK(st["accept_rate"] == 0.0);
    CHECK(st["training"] == false);

    CHECK(s.client->Get("/api/v1/nothing")->status == 404);
    CHECK(body(s.client->Get("/api/v1/nothing"))["error"] == "NotFound");
}

TEST_CASE("retrain over HTTP") {
    Running s(ServiceConfig{});
    const auto& g = trained().corpus.ground_truth;
    auto r = s.post("/api/v1/retrain", json::object());
    CHECK(r->status == 422);
    CHECK(body(r)["error"] == "InsufficientData");
    CHECK(s.post("/api/v1/retrain", {{"policy", 3}})->status == 400);

    for (int i = 0; i < 2; ++i) {
        const auto t = "/api/v1/turbines/" + std::to_string(10 + i);
        s.post(t + "/alarms", events_json(g[static_cast<std::size_t>(i)]));
        const auto id = body(s.client->Get((t + "/recommendations").c_str()))[0]["id"];
        s.post("/api/v1/feedback",
               {{"recommendation_id", id}, {"rating", 1}, {"verdict", "reject"}, {"corrected_label", "inspect hub"}});
    }
    r = s.post("/api/v1/retrain", {{"policy", {{"min_new_examples", 2}}}});
    CHECK(r->status == 202);
    CHECK(body(r)["state"] == "running");
    const auto second = s.post("/api/v1/retrain", {{"policy", {{"min_new_examples", 2}}}});
    CHECK((second->status == 409 || second->status == 202));
    const auto done = s.svc->wait_for_retrain();
    REQUIRE(done);
    const auto st = body(s.client->Get("/api/v1/status"));
    CHECK(st["last_retrain"]["state"] == done->state);
    const auto ev = body(s.client->Get("/api/v1/events?limit=3"));
    REQUIRE_FALSE(ev.empty());
    CHECK(ev[0]["kind"].get<std::string>().rfind("retrain_", 0) == 0);
    CHECK(ev[0]["detail"].is_object());
}

TEST_CASE("no model loaded") {
    Running s(ServiceConfig{}, false);
    s.post("/api/v1/turbines/1/alarms", json::array({{{"time_on", "2020-01-01T00:00:00Z"}, {"text", "x"}}}));
    const auto r = s.client->Get("/api/v1/turbines/1/recommendations");
    CHECK(r->status == 503);
    CHECK(body(r)["error"] == "NoModelLoaded");
    CHECK(body(s.client->Get("/api/v1/status"))["model_loaded"] == false);
}

TEST_CASE("static token") {
    oracle::TempDir dir("static");
    std::ofstream(dir / "index.html") << "<html>review</html>";
    ServiceConfig cfg;
    cfg.api_token = "tok";
    cfg.static_dir = dir.path;
    Running s(cfg);
    CHECK(s.client->Get("/api/v1/status")->status == 200);

    httplib::Client anon("127.0.0.1", s.port);
    auto r = anon.Get("/api/v1/status");
    CHECK(r->status == 401);
    CHECK(json::parse(r->body)["error"] == "Unauthorized");
    anon.set_default_headers({{"X-Api-Token", "wrong"}});
    CHECK(anon.Get("/api/v1/status")->status == 401);
    r = anon.Get("/index.html");
    CHECK(r->status == 200);
    CHECK(r->body == "<html>review</html>");
}
