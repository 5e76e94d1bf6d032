#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "activerank/model.hpp"
#include "activerank/runner.hpp"
#include "activerank/service/http.hpp"

namespace activerank::service {
namespace {

json request(std::vector<std::string> items, std::vector<std::size_t> boundaries, std::uint64_t seed = 5,
             std::string alpha = "relaxed_b") {
  return json{{"items", items}, {"boundaries", boundaries}, {"delta", 0.1}, {"alpha", alpha}, {"seed", seed}};
}

const std::vector<std::string> kFour = {"apple", "banana", "cherry", "date"};

int status_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 0;
}

// Answers every query of a session from a Bernoulli oracle on `m`, the way a
// scripted client would.
void drive(Session& s, const ComparisonMatrix& m, std::uint64_t seed, RecordingOracle* rec = nullptr) {
  BernoulliOracle truth(m, seed);
  for (json q = s.next(); q["status"] == "pending"; q = s.next()) {
    const ComparisonQuery query{q["query_id"], q["left_item"], q["right_item"], q["round"]};
    const bool won = rec ? rec->answer(query).subject_won : truth.answer(query).subject_won;
    s.answer(query.query_id, won ? "left" : "right");
  }
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("activerank_service_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

TEST(Create, Validation) {
  SessionStore store;
  EXPECT_EQ(status_of([&] { store.create(request(kFour, {2, 4})); }), 0);
  EXPECT_EQ(status_of([&] { store.create(request(kFour, {3})); }), 422);
  EXPECT_EQ(status_of([&] { store.create(request({"a", "b", "a"}, {1, 3})); }), 422);
  EXPECT_EQ(status_of([&] { store.create(request({"a"}, {1})); }), 422);
  EXPECT_EQ(status_of([&] { store.create(request(kFour, {2, 4}, 1, "fastest")); }), 422);
  EXPECT_EQ(status_of([&] { store.create(json{{"items", kFour}}); }), 422);
  std::vector<std::string> many;
  for (int i = 0; i < 1001; ++i) many.push_back("item" + std::to_string(i));
  EXPECT_EQ(status_of([&] { store.create(request(many, {1, 1001})); }), 422);
  json bad_delta = request(kFour, {2, 4});
  bad_delta["delta"] = 1.5;
  EXPECT_EQ(status_of([&] { store.create(bad_delta); }), 422);
  EXPECT_EQ(store.size(), 1u);
}

TEST(Create, FreshSessionIsInRoundZero) {
  SessionStore store;
  auto s = store.create(request(kFour, {2, 4}));
  const json st = *s->state();
  EXPECT_EQ(st["counts"]["round"], 0);
  EXPECT_EQ(st["counts"]["comparisons"], 0);
  EXPECT_EQ(st["counts"]["active"], 4);
  EXPECT_EQ(st["status"], "running");
  for (const auto& item : st["snapshot"]["items"]) EXPECT_EQ(item["status"], "active");
  EXPECT_EQ(st["snapshot"]["items"][2]["label"], "cherry");
  // Without an explicit seed one is drawn and recorded.
  json no_seed = request(kFour, {2, 4});
  no_seed.erase("seed");
  EXPECT_TRUE((*store.create(no_seed)->state())["config"]["seed"].is_number_unsigned());
}

TEST(Next, FirstQueryAndIdempotence) {
  SessionStore store;
  auto s = store.create(request(kFour, {2, 4}));
  const json q = s->next();
  EXPECT_EQ(q["status"], "pending");
  EXPECT_EQ(q["round"], 1);
  EXPECT_EQ(q["progress"]["question"], 1);
  EXPECT_EQ(q["progress"]["of"], 4);
  EXPECT_NE(q["left"], q["right"]);
  EXPECT_EQ(s->next(), q);
}

TEST(Answer, RoundAdvancesOnLastQuery) {
  SessionStore store;
  auto s = store.create(request(kFour, {2, 4}));
  for (int k = 0; k < 4; ++k) {
    const json q = s->next();
    EXPECT_EQ(q["progress"]["question"], k + 1);
    const json r = s->answer(q["query_id"], "left");
    EXPECT_TRUE(r["accepted"].get<bool>());
    EXPECT_EQ(r["round_advanced"].get<bool>(), k == 3);
  }
  EXPECT_EQ((*s->state())["counts"]["round"], 1);
  EXPECT_EQ((*s->state())["counts"]["comparisons"], 4);
}

TEST(Answer, StaleDuplicateAndInvalid) {
  SessionStore store;
  auto s = store.create(request(kFour, {2, 4}));
  EXPECT_EQ(status_of([&] { s->answer(0, "left"); }), 409);  // nothing exposed yet
  const json q = s->next();
  const std::uint64_t id = q["query_id"];
  EXPECT_EQ(status_of([&] { s->answer(id, "up"); }), 422);
  EXPECT_EQ(status_of([&] { s->answer(id + 1, "left"); }), 409);  // not the exposed one
  s->answer(id, "right");
  const json before = *s->state();
  EXPECT_EQ(status_of([&] { s->answer(id, "left"); }), 409);
  EXPECT_EQ(*s->state(), before);
}

TEST(Answer, ConcurrentSubmissionsAcceptOne) {
  SessionStore store;
  auto s = store.create(request(kFour, {2, 4}));
  const std::uint64_t id = s->next()["query_id"];
  std::atomic<int> accepted{0}, rejected{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 8; ++w)
      pool.emplace_back([&] {
        try {
          s->answer(id, "left");
          ++accepted;
        } catch (const ServiceError& e) {
          if (e.status() == 409) ++rejected;
        }
      });
  }
  EXPECT_EQ(accepted.load(), 1);
  EXPECT_EQ(rejected.load(), 7);
  EXPECT_EQ((*s->state())["counts"]["answered_in_round"], 1);
}

TEST(State, IntervalsShrinkWithRounds) {
  SessionStore store;
  auto s = store.create(request({"a", "b", "c", "d", "e", "f"}, {3, 6}, 3, "paper"));
  const ComparisonMatrix m = model_eta(6, 0.3);
  BernoulliOracle truth(m, 3);
  std::vector<double> alpha;
  for (int round = 0; round < 40; ++round) {
    for (bool advanced = false; !advanced;) {
      const json q = s->next();
      const ComparisonQuery query{q["query_id"], q["left_item"], q["right_item"], q["round"]};
      advanced = s->answer(query.query_id, truth.answer(query).subject_won ? "left" : "right")["round_advanced"];
    }
    const json st = *s->state();
    alpha.push_back(st["snapshot"]["alpha"].get<double>());
    const auto& item = st["snapshot"]["items"][0];
    EXPECT_NEAR(item["hi"].get<double>() - item["lo"].get<double>(), 8 * alpha.back(), 1e-12);
  }
  for (std::size_t t = 1; t < alpha.size(); ++t) EXPECT_LT(alpha[t], alpha[t - 1]);
  // alpha_t sqrt(t) grows only through the iterated logarithm.
  const double first = alpha[1] * std::sqrt(2.0), last = alpha.back() * std::sqrt(40.0);
  EXPECT_GT(last, first);
  EXPECT_LT(last / first, 1.5);
}

TEST(State, FinishedPartitionCoversEveryLabel) {
  SessionStore store;
  auto s = store.create(request(kFour, {1, 2, 4}));
  drive(*s, model_eta(4, 1.0), 8);
  const json done = s->next();
  EXPECT_EQ(done["status"], "done");
  std::multiset<std::string> labels;
  for (const auto& set : done["partition"])
    for (const auto& l : set) labels.insert(l.get<std::string>());
  EXPECT_EQ(labels, std::multiset<std::string>(kFour.begin(), kFour.end()));
  EXPECT_EQ(done["partition"].size(), 3u);
  EXPECT_EQ((*s->state())["partition"], done["partition"]);
  EXPECT_EQ((*s->state())["status"], "done");
  EXPECT_EQ(status_of([&] { s->answer(0, "left"); }), 409);
}

TEST(Fidelity, SessionReproducesInProcessRun) {
  const ComparisonMatrix m = model_eta(4, 1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SessionStore store;
    auto s = store.create(request(kFour, {2, 4}, seed));
    BernoulliOracle inner(m, seed);
    RecordingOracle via_session(inner);
    drive(*s, m, seed, &via_session);

    BernoulliOracle direct_inner(m, seed);
    RecordingOracle direct(direct_inner);
    const RunResult r = run_to_completion(direct, PartitionSpec(4, {2, 4}), 0.1, AlphaSchedule::relaxed_b(), seed);
    EXPECT_EQ(via_session.trace(), direct.trace());
    const json st = *s->state();
    EXPECT_EQ(st["counts"]["comparisons"], r.comparisons);
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t k = 0; k < r.sets[l].size(); ++k) EXPECT_EQ(st["assigned"][l][k], kFour[r.sets[l][k]]);
  }
}

TEST(Persistence, RestartResumesPendingQuery) {
  TempDir dir;
  std::string id;
  json pending;
  {
    SessionStore store(dir.path());
    auto s = store.create(request(kFour, {2, 4}, 21));
    id = s->id();
    for (int k = 0; k < 6; ++k) s->answer(s->next()["query_id"], k % 3 ? "left" : "right");
    pending = s->next();
    EXPECT_TRUE(std::filesystem::exists(dir.path() / (id + ".jsonl")));
  }
  SessionStore reopened(dir.path());
  ASSERT_EQ(reopened.size(), 1u);
  auto s = reopened.get(id);
  EXPECT_EQ(s->next(), pending);
  EXPECT_EQ((*s->state())["counts"]["comparisons"], 4);
  EXPECT_EQ((*s->state())["counts"]["answered_in_round"], 2);

  // Replayed sessions keep logging: finish it, reopen, still done.
  drive(*s, model_eta(4, 1.0), 21);
  const json final_state = *s->state();
  SessionStore again(dir.path());
  EXPECT_EQ(again.get(id)->next()["status"], "done");
  EXPECT_EQ((*again.get(id)->state())["assigned"], final_state["assigned"]);

  again.remove(id);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / (id + ".jsonl")));
  EXPECT_EQ(status_of([&] { again.get(id); }), 404);
}

TEST(Persistence, CorruptLogIsReported) {
  TempDir dir;
  {
    std::ofstream(dir.path() / "broken.jsonl") << "{\"event\": \"answer\"}\n";
  }
  EXPECT_THROW(SessionStore store(dir.path()), ConfigError);
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    register_routes(server_, store_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  SessionStore store_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

TEST_F(HttpTest, FullSessionOverHttp) {
  auto c = client();
  const ComparisonMatrix m = model_eta(4, 1.0);
  auto created = c.Post("/sessions", request(kFour, {2, 4}, 7).dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = body_of(created)["session_id"];

  BernoulliOracle inner(m, 7);
  RecordingOracle rec(inner);
  for (;;) {
    auto next = c.Get("/sessions/" + id + "/next");
    ASSERT_EQ(next->status, 200);
    const json q = body_of(next);
    if (q["status"] == "done") break;
    const ComparisonQuery query{q["query_id"], q["left_item"], q["right_item"], q["round"]};
    const json answer{{"query_id", query.query_id}, {"winner", rec.answer(query).subject_won ? "left" : "right"}};
    auto a = c.Post("/sessions/" + id + "/answer", answer.dump(), "application/json");
    ASSERT_EQ(a->status, 200) << a->body;
  }
  BernoulliOracle direct_inner(m, 7);
  RecordingOracle direct(direct_inner);
  const RunResult r = run_to_completion(direct, PartitionSpec(4, {2, 4}), 0.1, AlphaSchedule::relaxed_b(), 7);
  EXPECT_EQ(rec.trace(), direct.trace());
  const json st = body_of(c.Get("/sessions/" + id + "/state"));
  EXPECT_EQ(st["counts"]["comparisons"], r.comparisons);
  EXPECT_EQ(st["status"], "done");

  auto del = c.Delete("/sessions/" + id);
  EXPECT_EQ(del->status, 200);
  EXPECT_EQ(c.Get("/sessions/" + id + "/state")->status, 404);
}

TEST_F(HttpTest, ErrorResponses) {
  auto c = client();
  const auto expect_error = [](const httplib::Result& r, int status) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, status) << r->body;
    const json b = json::parse(r->body);
    EXPECT_TRUE(b.contains("code"));
    EXPECT_TRUE(b.contains("message"));
  };
  expect_error(c.Get("/sessions/nope/next"), 404);
  expect_error(c.Post("/sessions/nope/answer", R"({"query_id":0,"winner":"left"})", "application/json"), 404);
  expect_error(c.Delete("/sessions/nope"), 404);
  expect_error(c.Post("/sessions", request(kFour, {3}).dump(), "application/json"), 422);
  expect_error(c.Post("/sessions", "{not json", "application/json"), 400);
  expect_error(c.Get("/nowhere"), 404);

  const std::string id = body_of(c.Post("/sessions", request(kFour, {2, 4}).dump(), "application/json"))["session_id"];
  const json q = body_of(c.Get("/sessions/" + id + "/next"));
  const std::string path = "/sessions/" + id + "/answer";
  expect_error(c.Post(path, json{{"query_id", q["query_id"]}, {"winner", "middle"}}.dump(), "application/json"), 422);
  expect_error(c.Post(path, json{{"winner", "left"}}.dump(), "application/json"), 422);
  EXPECT_EQ(c.Post(path, json{{"query_id", q["query_id"]}, {"winner", "left"}}.dump(), "application/json")->status, 200);
  expect_error(c.Post(path, json{{"query_id", q["query_id"]}, {"winner", "left"}}.dump(), "application/json"), 409);
}

TEST_F(HttpTest, CorsPreflight) {
  auto c = client();
  auto r = c.Options("/sessions");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_NE(r->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

}  // namespace
}  // namespace activerank::service
