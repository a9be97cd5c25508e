#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "videonav/errors.hpp"
#include "videonav/http_backend.hpp"

using namespace videonav;

namespace {

/// Local chat-completions stub answering with a fixed reply.
class StubServer {
public:
    explicit StubServer(std::string reply, int status = 200) : reply_(std::move(reply)), status_(status) {
        svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            auth = req.get_header_value("Authorization");
            body = nlohmann::json::parse(req.body);
            res.status = status_;
            const nlohmann::json out{{"choices", {{{"message", {{"content", reply_}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = svr_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { svr_.listen_after_bind(); });
        svr_.wait_until_ready();
    }
    ~StubServer() {
        svr_.stop();
        thread_.join();
    }

    ServerConfig config() const {
        return {"http://127.0.0.1:" + std::to_string(port_) + "/v1", "stub", 5.0, 1};
    }

    std::atomic<int> hits{0};
    std::string auth;
    nlohmann::json body;

private:
    std::string reply_;
    int status_;
    httplib::Server svr_;
    int port_ = 0;
    std::thread thread_;
};

GroundedQA sample_qa() {
    GroundedQA q;
    q.id = "q";
    q.question = "What color is the kite?";
    q.choices = {"blue", "red", "green", "black"};
    q.answer_index = 1;
    q.clue = IntervalSet{{100, 110}};
    return q;
}

}  // namespace

TEST_CASE("server config") {
    const auto cfg = server_config_from_json(
        nlohmann::json::parse(R"({"base_url":"http://localhost:8000/v1","model":"m"})"));
    CHECK(cfg.model == "m");
    CHECK_THROWS_AS(server_config_from_json(nlohmann::json::parse(R"({"model":"m"})")), ConfigError);
    CHECK_THROWS_AS(server_config_from_json(nlohmann::json::parse(
                        R"({"base_url":"http://x","model":"m","api_key":"k"})")),
                    ConfigError);
}

TEST_CASE("caption extraction") {
    CHECK(extract_caption("x <caption>a dog</caption> y") == "a dog");
    CHECK_FALSE(extract_caption("a dog").has_value());
}

TEST_CASE("captions and qa over http") {
    setenv(kApiKeyEnv, "test-key", 1);
    StubServer cap("<caption>A dog runs.</caption>");
    StubServer qa("B. red");
    HttpBackend backend(cap.config(), qa.config());
    GroundedVideo v;
    v.id = "vid";
    v.duration_s = 4096;
    const auto cfg = make_tree_config(v.duration_s);

    const auto c = backend.caption(v, {0, 1}, cfg);
    CHECK(c.text == "A dog runs.");
    CHECK_FALSE(c.warning.has_value());
    CHECK(c.frames_used == frame_budget(2));
    CHECK(cap.auth == "Bearer test-key");
    CHECK(cap.body["model"] == "stub");
    CHECK(cap.body["video_segment"]["num_frames"] == frame_budget(2));

    const auto a = backend.video_qa(v, sample_qa(), {0, 1, 2}, "what color?", cfg);
    CHECK(a.answer_index == 1);
    CHECK_FALSE(a.is_idk);
    CHECK_THROWS_AS(backend.video_qa(v, sample_qa(), {0, 1}, "q", cfg), LegalityError);
    unsetenv(kApiKeyEnv);
}

TEST_CASE("untagged captions and idk answers") {
    StubServer cap("just text");
    StubServer qa("I don't know.");
    HttpBackend backend(cap.config(), qa.config());
    GroundedVideo v;
    v.id = "vid";
    v.duration_s = 600;
    const auto cfg = make_tree_config(v.duration_s);
    const auto c = backend.caption(v, {0}, cfg);
    CHECK(c.text == "just text");
    CHECK(c.warning.has_value());
    CHECK(cap.auth.empty());
    CHECK(backend.video_qa(v, sample_qa(), {0, 0, 0}, "q", cfg).is_idk);
}

TEST_CASE("http failures") {
    StubServer broken("oops", 500);
    try {
        ChatClient(broken.config()).complete(std::vector<ChatMessage>{{"user", "hi"}});
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.status() == 500);
    }
    CHECK(broken.hits == 1);

    ServerConfig dead{"http://127.0.0.1:1/v1", "m", 1.0, 2};
    CHECK_THROWS_AS(ChatClient(dead).complete(std::vector<ChatMessage>{{"user", "hi"}}),
                    TransportError);
    CHECK_THROWS_AS(ChatClient(ServerConfig{"localhost:80", "m", 1.0, 0}), ConfigError);
}
