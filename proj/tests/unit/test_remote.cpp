#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "s2k/error.hpp"
#include "s2k/remote.hpp"

using namespace s2k;

namespace {

// Each token is a run of non-space characters with its leading spaces;
// a newline is a token of its own.
std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      if (!cur.empty()) out.push_back(cur);
      out.push_back("\n");
      cur.clear();
    } else if (c == ' ' && !cur.empty() && cur.back() != ' ') {
      out.push_back(cur);
      cur = " ";
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Minimal completions server. Echo requests return the prompt's tokens
/// with a five-entry top list; others return a fixed window.
class FakeServer {
 public:
  FakeServer() {
    svr_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      auto now = ++inflight_;
      for (auto peak = peak_.load(); now > peak && !peak_.compare_exchange_weak(peak, now);) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
      --inflight_;
      if (fail_next.load() > 0) {
        --fail_next;
        res.status = 429;
        return;
      }
      auto body = nlohmann::json::parse(req.body);
      last_body = body;
      nlohmann::json reply;
      if (body.value("echo", false)) {
        auto prompt = body["prompt"].get<std::string>();
        auto toks = split_tokens(prompt);
        nlohmann::json offsets = nlohmann::json::array(), lps = nlohmann::json::array(),
                       tops = nlohmann::json::array();
        long long off = 0;
        for (const auto& t : toks) {
          offsets.push_back(off);
          off += static_cast<long long>(t.size());
          lps.push_back(-0.5);
          tops.push_back({{t, -0.5}, {" a", -2.0}, {" b", -2.5}, {" c", -3.0}, {" d", -3.5}});
        }
        reply = {{"choices", {{{"text", prompt},
                               {"finish_reason", "length"},
                               {"logprobs",
                                {{"tokens", toks}, {"token_logprobs", lps}, {"top_logprobs", tops},
                                 {"text_offset", offsets}}}}}}};
      } else {
        reply = {{"text", " the tide"},
                 {"tokens", {" the", " tide"}},
                 {"token_logprobs", {-0.1, -0.3}},
                 {"finish_reason", "stop"}};
      }
      res.set_content(reply.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~FakeServer() {
    svr_.stop();
    thread_.join();
  }

  RemoteConfig config() const {
    RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.backoff_base_ms = 1;
    c.vocab_size = 100;
    return c;
  }
  std::size_t peak() const { return peak_.load(); }

  std::atomic<int> fail_next{0};
  std::atomic<int> delay_ms{0};
  nlohmann::json last_body;

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<std::size_t> inflight_{0};
  std::atomic<std::size_t> peak_{0};
};

PromptContext ctx() {
  PromptContext c;
  c.add(Role::user, "Question: when does the tide turn?", "question");
  return c;
}

}  // namespace

TEST_CASE("window proposal parses the flat reply shape") {
  FakeServer server;
  RemoteBackend rb(server.config());
  auto w = rb.propose_window(ctx(), 2, {});
  CHECK(w.texts == std::vector<std::string>{" the", " tide"});
  CHECK(w.logprobs == std::vector<double>{-0.1, -0.3});
  CHECK(w.ended);
  CHECK(server.last_body["max_tokens"] == 2);
  CHECK(server.last_body["temperature"] == 0.0);
}

TEST_CASE("429 is retried with backoff, then succeeds") {
  FakeServer server;
  RemoteBackend rb(server.config());
  std::vector<long long> sleeps;
  rb.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  server.fail_next = 2;
  CHECK(rb.generate_text(ctx(), {}) == " the tide");
  CHECK(rb.retries() == 2);
  CHECK(rb.requests() == 3);
  CHECK(sleeps == std::vector<long long>{1, 2});
}

TEST_CASE("exhausted retries raise BackendUnavailable") {
  FakeServer server;
  auto cfg = server.config();
  cfg.retry_max = 1;
  RemoteBackend rb(cfg);
  rb.set_sleeper([](std::chrono::milliseconds) {});
  server.fail_next = 5;
  CHECK_THROWS_AS(rb.generate_text(ctx(), {}), BackendUnavailable);
  CHECK(rb.requests() == 2);
}

TEST_CASE("unreachable server raises BackendUnavailable") {
  RemoteConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.retry_max = 0;
  cfg.timeout_ms = 500;
  RemoteBackend rb(cfg);
  CHECK_THROWS_AS(rb.generate_text(ctx(), {}), BackendUnavailable);
}

TEST_CASE("in-flight requests stay under the cap") {
  FakeServer server;
  server.delay_ms = 40;
  auto cfg = server.config();
  cfg.max_inflight = 2;
  RemoteBackend rb(cfg);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { rb.generate_text(ctx(), {}); });
  threads.clear();
  CHECK(rb.peak_inflight() <= 2);
  CHECK(server.peak() <= 2);
  CHECK(server.peak() >= 1);
}

TEST_CASE("teacher forcing returns top-5 distributions") {
  FakeServer server;
  RemoteBackend rb(server.config());
  auto ids = rb.encode("high tide");
  REQUIRE(ids.size() == 2);
  auto dists = rb.score_teacher_forced(ctx(), ids);
  REQUIRE(dists.size() == 2);
  for (std::size_t i = 0; i < dists.size(); ++i) {
    CHECK(dists[i].coverage == Coverage::top_k);
    CHECK(dists[i].k() == 5);
    CHECK(dists[i].vocab_size == 100);
    CHECK(dists[i].prob(ids[i]) == doctest::Approx(std::exp(-0.5)));
  }
  CHECK_FALSE(rb.descriptor().capabilities.full_distributions);
}

TEST_CASE("remote context limit") {
  FakeServer server;
  auto cfg = server.config();
  cfg.context_limit = 3;
  RemoteBackend rb(cfg);
  CHECK_THROWS_AS(rb.generate_text(ctx(), {}), ContextTooLong);
}

TEST_CASE("remote backend needs a base url") { CHECK_THROWS_AS(RemoteBackend(RemoteConfig{}), ConfigError); }
