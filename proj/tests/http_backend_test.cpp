#include <gtest/gtest.h>

#include <functional>
#include <mutex>
#include <thread>

#include "ponte/backend/batch.hpp"

namespace ponte {
namespace {

using Json = nlohmann::json;

// In-process stand-in for the inference service.
class FakeSidecar {
 public:
  using Handler = std::function<void(const Json &request, httplib::Response &res)>;

  FakeSidecar() {
    server_.Post("/v1/embed", [this](const httplib::Request &req, httplib::Response &res) {
      Json body;
      try {
        body = Json::parse(req.body);
      } catch (const Json::parse_error &) {
        res.status = 400;
        res.set_content(R"({"error": "bad json"})", "application/json");
        return;
      }
      {
        std::lock_guard lock(mutex_);
        requests_.push_back(body);
      }
      Handler handler;
      {
        std::lock_guard lock(mutex_);
        handler = handler_;
      }
      handler(body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeSidecar() {
    server_.stop();
    thread_.join();
  }

  void on_embed(Handler handler) {
    std::lock_guard lock(mutex_);
    handler_ = std::move(handler);
  }
  std::vector<Json> requests() {
    std::lock_guard lock(mutex_);
    return requests_;
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  Handler handler_ = [](const Json &, httplib::Response &res) { res.status = 500; };
  std::vector<Json> requests_;
};

void reply(httplib::Response &res, const Json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json good_body(std::size_t dim = 3, const std::string &model = "tiny-lm") {
  Json embedding = Json::array();
  for (std::size_t i = 0; i < dim; ++i) embedding.push_back(0.5 * static_cast<double>(i) - 0.25);
  return {{"embedding", embedding}, {"generated_word", "happy"}, {"model_id", model}, {"hidden_size", dim}};
}

BackendConfig remote(const FakeSidecar &sidecar) {
  BackendConfig config;
  config.endpoint = sidecar.url();
  config.model_id = "tiny-lm";
  config.layer_index = -2;
  config.request_timeout = std::chrono::milliseconds(5000);
  return config;
}

ConditionalPrompt sample() { return render(find_template(registry(), "T9"), "Best fish I have ever had.", "the emotion"); }

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidArgument;
}

TEST(HttpBackend, RequestShapeAndSuccess) {
  FakeSidecar sidecar;
  sidecar.on_embed([](const Json &, httplib::Response &res) { reply(res, good_body()); });
  auto config = remote(sidecar);
  config.generate_words = true;
  config.max_word_tokens = 5;
  HttpBackend backend(config);
  const auto r = embed(backend, sample());

  const auto requests = sidecar.requests();
  ASSERT_EQ(requests.size(), 1u);
  EXPECT_EQ(requests[0].at("prompt"), sample().rendered);
  EXPECT_EQ(requests[0].at("layer_index"), -2);
  EXPECT_EQ(requests[0].at("generate_word"), true);
  EXPECT_EQ(requests[0].at("max_word_tokens"), 5);
  EXPECT_EQ(requests[0].size(), 4u);

  EXPECT_EQ(r.embedding.values, (std::vector<float>{-0.25f, 0.25f, 0.75f}));
  EXPECT_EQ(r.generated_word, "happy");
  EXPECT_EQ(r.model_id, "tiny-lm");
  EXPECT_EQ(r.layer_index, -2);
}

TEST(HttpBackend, WordDroppedUnlessRequested) {
  FakeSidecar sidecar;
  sidecar.on_embed([](const Json &, httplib::Response &res) { reply(res, good_body()); });
  HttpBackend backend(remote(sidecar));
  EXPECT_FALSE(backend.embed(sample()).generated_word.has_value());
  EXPECT_EQ(sidecar.requests()[0].at("generate_word"), false);
}

TEST(HttpBackend, NullWordAccepted) {
  FakeSidecar sidecar;
  sidecar.on_embed([](const Json &, httplib::Response &res) {
    auto body = good_body();
    body["generated_word"] = nullptr;
    reply(res, body);
  });
  auto config = remote(sidecar);
  config.generate_words = true;
  HttpBackend backend(config);
  EXPECT_FALSE(backend.embed(sample()).generated_word.has_value());
}

TEST(HttpBackend, ErrorStatusIsRejected) {
  FakeSidecar sidecar;
  sidecar.on_embed([](const Json &, httplib::Response &res) { reply(res, {{"error", "layer out of range"}}, 400); });
  HttpBackend backend(remote(sidecar));
  try {
    backend.embed(sample());
    ADD_FAILURE();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendRejected);
    EXPECT_TRUE(is_backend_error(e.code()));
    EXPECT_NE(std::string(e.what()).find("layer out of range"), std::string::npos);
  }
  sidecar.on_embed([](const Json &, httplib::Response &res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  EXPECT_EQ(code_of([&] { backend.embed(sample()); }), ErrorCode::BackendRejected);
}

TEST(HttpBackend, MalformedResponses) {
  FakeSidecar sidecar;
  HttpBackend backend(remote(sidecar));
  auto with = [&](std::function<void(Json &)> edit) {
    sidecar.on_embed([edit](const Json &, httplib::Response &res) {
      auto body = good_body();
      edit(body);
      reply(res, body);
    });
    return code_of([&] { backend.embed(sample()); });
  };
  EXPECT_EQ(with([](Json &b) { b.erase("embedding"); }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b.erase("model_id"); }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b.erase("hidden_size"); }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["hidden_size"] = 4; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["embedding"] = Json::array(); b["hidden_size"] = 0; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["embedding"][1] = nullptr; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["embedding"][1] = "0.5"; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["embedding"][1] = 1e300; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["generated_word"] = "say \"hi"; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["generated_word"] = 3; }), ErrorCode::ProtocolError);
  EXPECT_EQ(with([](Json &b) { b["model_id"] = "other-lm"; }), ErrorCode::ProtocolError);

  sidecar.on_embed([](const Json &, httplib::Response &res) { res.set_content("not json", "text/plain"); });
  EXPECT_EQ(code_of([&] { backend.embed(sample()); }), ErrorCode::ProtocolError);
  sidecar.on_embed([](const Json &, httplib::Response &res) { res.set_content("[1, 2]", "application/json"); });
  EXPECT_EQ(code_of([&] { backend.embed(sample()); }), ErrorCode::ProtocolError);
}

TEST(HttpBackend, NaNLiteralRejected) {
  BackendConfig config;
  config.model_id = "tiny-lm";
  EXPECT_EQ(code_of([&] {
              parse_embed_response(R"({"embedding": [0.1, NaN], "model_id": "tiny-lm", "hidden_size": 2})", config);
            }),
            ErrorCode::ProtocolError);
}

TEST(HttpBackend, DimensionMustStayFixed) {
  FakeSidecar sidecar;
  HttpBackend backend(remote(sidecar));
  sidecar.on_embed([](const Json &, httplib::Response &res) { reply(res, good_body(3)); });
  backend.embed(sample());
  sidecar.on_embed([](const Json &, httplib::Response &res) { reply(res, good_body(4)); });
  EXPECT_EQ(code_of([&] { backend.embed(sample()); }), ErrorCode::DimensionMismatch);
}

TEST(HttpBackend, Unreachable) {
  std::string url;
  {
    FakeSidecar closed;
    url = closed.url();
  }
  BackendConfig config;
  config.endpoint = url;
  config.model_id = "tiny-lm";
  config.request_timeout = std::chrono::milliseconds(2000);
  HttpBackend backend(config);
  try {
    backend.embed(sample());
    ADD_FAILURE();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnreachable);
    EXPECT_TRUE(is_backend_error(e.code()));
  }
}

TEST(HttpBackend, BatchThroughTheWire) {
  FakeSidecar sidecar;
  sidecar.on_embed([](const Json &req, httplib::Response &res) {
    auto body = good_body();
    body["embedding"][0] = static_cast<double>(req.at("prompt").get<std::string>().size());
    reply(res, body);
  });
  auto config = remote(sidecar);
  config.max_parallel_requests = 3;
  HttpBackend backend(config);
  std::vector<ConditionalPrompt> prompts;
  for (int i = 0; i < 10; ++i) {
    prompts.push_back(render(find_template(registry(), "T1"), std::string(static_cast<std::size_t>(i + 1), 'x'), "c"));
  }
  prompts.push_back(prompts[0]);
  const auto out = embed_batch(backend, prompts, nullptr);
  EXPECT_EQ(sidecar.requests().size(), 10u);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    EXPECT_EQ(out[i].embedding.values[0], static_cast<float>(prompts[i].rendered.size()));
  }
}

TEST(Endpoint, Parse) {
  auto ep = Endpoint::parse("http://localhost:8000");
  EXPECT_EQ(ep.scheme_host_port, "http://localhost:8000");
  EXPECT_EQ(ep.base_path, "");
  ep = Endpoint::parse("http://host:1/api/v2//");
  EXPECT_EQ(ep.scheme_host_port, "http://host:1");
  EXPECT_EQ(ep.base_path, "/api/v2");
  EXPECT_EQ(Endpoint::parse("http://h/").base_path, "");
  EXPECT_EQ(code_of([] { Endpoint::parse("https://h"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { Endpoint::parse("localhost:8000"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { Endpoint::parse("http://"); }), ErrorCode::InvalidArgument);
}

TEST(EmbedRequest, Body) {
  BackendConfig config;
  config.layer_index = 7;
  const auto body = embed_request(config, sample());
  EXPECT_EQ(body.dump(), nlohmann::ordered_json({{"prompt", sample().rendered},
                                                 {"layer_index", 7},
                                                 {"generate_word", false},
                                                 {"max_word_tokens", 16}})
                             .dump());
}

}  // namespace
}  // namespace ponte
