#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "faceatlas/service.hpp"
#include "net_client.hpp"
#include "support.hpp"

using namespace faceatlas;
using nlohmann::json;

namespace {

std::shared_ptr<const Engine> sample_engine() {
  return make_engine(support::sample_program(), default_semantics(),
                     parse_channels(read_text_file(support::data_path("channels.csv"))));
}

json frame_message(std::int64_t ts, bool degenerate = false) {
  FixtureOptions opts;
  opts.timestamp_us = ts;
  LandmarkFrame f = synthetic_face(opts);
  if (degenerate) f.vertices[336] = f.vertices[107];
  json msg = frame_to_json(f);
  msg["type"] = "frame";
  return msg;
}

std::vector<std::string> types_of(const std::vector<json>& replies) {
  std::vector<std::string> out;
  for (const auto& r : replies) out.push_back(r.at("type"));
  return out;
}

/// Runs every started job to completion immediately.
std::vector<json> drain(Session& s, const Engine& engine, Session::Step step) {
  std::vector<json> replies = step.replies;
  std::deque<Session::Job> jobs(step.start.begin(), step.start.end());
  while (!jobs.empty()) {
    Session::Job job = std::move(jobs.front());
    jobs.pop_front();
    Session::Step next = s.complete(job.ts, evaluate_job(engine, job));
    replies.insert(replies.end(), next.replies.begin(), next.replies.end());
    jobs.insert(jobs.end(), next.start.begin(), next.start.end());
  }
  return replies;
}

}  // namespace

TEST_CASE("hello answers with the configuration") {
  const auto engine = sample_engine();
  Session s(engine, "s1", 1);
  const auto step = s.handle_message(R"({"type":"hello"})");
  REQUIRE(step.replies.size() == 1);
  const json& c = step.replies[0];
  CHECK(c["type"] == "config");
  CHECK(c["session"] == "s1");
  CHECK(c["max_in_flight"] == 1);
  CHECK(c["points"].size() == 6);
  CHECK(c["points"][4]["name"] == "Sibai");
  CHECK(c["points"][4]["region"] == "Eye");
  CHECK(c["points"][4]["class"] == "MultiTimeProportional");
  REQUIRE(c["channels"].size() == 3);
  CHECK(c["channels"][1]["code"] == "ST");
  CHECK(c["channels"][1]["color"] == "#E67E22");
  CHECK(c["channels"][1]["flow"] == json::array({"ST1", "ST2"}));
}

TEST_CASE("select and frame") {
  const auto engine = sample_engine();
  Session s(engine, "s", 1);
  auto ack = s.handle_message(R"({"type":"select","channels":["ST","ZZ"]})");
  REQUIRE(ack.replies.size() == 1);
  CHECK(ack.replies[0]["type"] == "ack");
  CHECK(ack.replies[0]["channels"] == json::array({"ST"}));
  CHECK(ack.replies[0]["unknown"] == json::array({"ZZ"}));

  const auto replies = drain(s, *engine, s.handle_message(frame_message(1000).dump()));
  REQUIRE(replies.size() == 1);
  const json& a = replies[0];
  CHECK(a["type"] == "atlas");
  CHECK(a["ts"] == 1000);
  CHECK(a["degenerate"] == false);
  CHECK(a["points"].size() == 4);
  for (const auto& p : a["points"]) CHECK(p["channel"] == "ST");
  CHECK(a["polylines"].size() == 2);

  // empty selection means every channel
  s.handle_message(R"({"type":"select","channels":[]})");
  const auto all = drain(s, *engine, s.handle_message(frame_message(2000).dump()));
  CHECK(all.at(0)["points"].size() == 9);
}

TEST_CASE("degenerate landmarks produce a degenerate atlas") {
  const auto engine = sample_engine();
  Session s(engine, "s", 1);
  const auto replies = drain(s, *engine, s.handle_message(frame_message(5, true).dump()));
  REQUIRE(replies.size() == 1);
  CHECK(replies[0]["type"] == "atlas");
  CHECK(replies[0]["degenerate"] == true);
  CHECK(replies[0]["points"].empty());
  CHECK(replies[0]["polylines"].empty());
}

TEST_CASE("a newer frame displaces the waiting one") {
  const auto engine = sample_engine();
  Session s(engine, "s", 1);
  auto first = s.handle_message(frame_message(1).dump());
  REQUIRE(first.start.size() == 1);
  CHECK(first.replies.empty());

  auto second = s.handle_message(frame_message(2).dump());
  CHECK(second.start.empty());
  CHECK(second.replies.empty());

  auto third = s.handle_message(frame_message(3).dump());
  CHECK(third.start.empty());
  // "dropped" for frame 2 waits behind frame 1
  CHECK(third.replies.empty());
  CHECK(s.held_replies() == 1);
  CHECK(s.in_flight() == 1);

  auto done1 = s.complete(1, evaluate_job(*engine, first.start[0]));
  CHECK(types_of(done1.replies) == std::vector<std::string>{"atlas", "dropped"});
  CHECK(done1.replies[0]["ts"] == 1);
  CHECK(done1.replies[1]["ts"] == 2);
  REQUIRE(done1.start.size() == 1);
  CHECK(done1.start[0].ts == 3);

  auto done3 = s.complete(3, evaluate_job(*engine, done1.start[0]));
  REQUIRE(done3.replies.size() == 1);
  CHECK(done3.replies[0]["ts"] == 3);
  CHECK(s.counters().frames == 3);
  CHECK(s.counters().admitted == 2);
  CHECK(s.counters().dropped == 1);
  CHECK(s.counters().completed == 2);
  CHECK_THROWS_AS(s.complete(3, json::object()), std::logic_error);
}

TEST_CASE("the selection is captured when a frame arrives") {
  const auto engine = sample_engine();
  Session s(engine, "s", 1);
  s.handle_message(R"({"type":"select","channels":["GV"]})");
  auto step = s.handle_message(frame_message(10).dump());
  s.handle_message(R"({"type":"select","channels":["ST"]})");
  const auto replies = drain(s, *engine, std::move(step));
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0]["points"].size() == 1);
  CHECK(replies[0]["points"][0]["id"] == "GV26");
}

TEST_CASE("malformed input is reported and the session continues") {
  const auto engine = sample_engine();
  Session s(engine, "s", 1);
  const auto one = [&](std::string_view text) {
    auto step = s.handle_message(text);
    REQUIRE(step.replies.size() == 1);
    CHECK(step.start.empty());
    return step.replies[0];
  };
  CHECK(one("{not json")["type"] == "error");
  CHECK(one("[1,2]")["type"] == "error");
  CHECK(one(R"({"kind":"hello"})")["type"] == "error");
  CHECK(one(R"({"type":"dance"})")["reason"].get<std::string>().find("dance") != std::string::npos);
  CHECK(one(R"({"type":"select","channels":"ST"})")["type"] == "error");
  CHECK(one(R"({"type":"select","channels":[1]})")["type"] == "error");
  CHECK(one(R"({"type":"frame","ts":1,"w":640,"h":640,"v":[]})")["type"] == "error");
  CHECK(s.counters().errors == 7);

  drain(s, *engine, s.handle_message(frame_message(100).dump()));
  CHECK(one(frame_message(100).dump())["reason"] == "frame timestamps must strictly increase");
  CHECK(one(R"({"type":"hello"})")["type"] == "config");
}

TEST_CASE("property: replies come back once per frame in timestamp order") {
  const auto engine = sample_engine();
  // a cheap stand-in for the evaluator keeps this fast
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cap = static_cast<std::size_t>(support::uniform_int(rng, 1, 3));
    Session s(engine, "p", cap);
    std::vector<Session::Job> running;
    std::vector<json> replies;
    const auto take = [&](Session::Step step) {
      replies.insert(replies.end(), step.replies.begin(), step.replies.end());
      for (auto& j : step.start) running.push_back(std::move(j));
    };
    std::int64_t ts = 0;
    const int frames = support::uniform_int(rng, 1, 25);
    int sent = 0;
    const std::string base = frame_message(0).dump();
    json frame = json::parse(base);
    while (sent < frames || !running.empty()) {
      const bool send = sent < frames && (running.empty() || support::uniform_int(rng, 0, 1) == 0);
      if (send) {
        ts += support::uniform_int(rng, 1, 50);
        frame["ts"] = ts;
        take(s.handle_message(frame.dump()));
        ++sent;
      } else {
        // finish any in-flight job, not necessarily the oldest
        const auto k = static_cast<std::size_t>(support::uniform_int(rng, 0, static_cast<int>(running.size()) - 1));
        const Session::Job job = running[k];
        running.erase(running.begin() + static_cast<std::ptrdiff_t>(k));
        take(s.complete(job.ts, json{{"type", "atlas"}, {"ts", job.ts}}));
      }
      CHECK(s.in_flight() <= cap);
    }
    CAPTURE(trial);
    // a waiting frame is promoted when the last job finishes, so nothing is left unanswered
    CHECK(s.held_replies() == 0);
    CHECK(replies.size() == static_cast<std::size_t>(frames));
    std::int64_t prev = -1;
    std::size_t dropped = 0;
    for (const auto& r : replies) {
      CHECK(r["ts"].get<std::int64_t>() > prev);
      prev = r["ts"];
      dropped += r["type"] == "dropped";
    }
    CHECK(replies.size() == s.counters().admitted + dropped);
    CHECK(s.counters().completed == s.counters().admitted);
    CHECK(s.counters().frames == static_cast<std::size_t>(frames));
  }
}

TEST_CASE("network server") {
  const auto engine = sample_engine();
  const auto dir = std::filesystem::temp_directory_path() / ("faceatlas-static-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>hi</html>";

  ServerOptions opts;
  opts.port = 0;
  opts.static_dir = dir.string();
  Server server(engine, opts);
  const std::uint16_t port = server.port();
  REQUIRE(port != 0);
  std::thread runner([&] { server.run(); });

  SUBCASE("http") {
    const auto health = support::http_get("127.0.0.1", port, "/healthz");
    CHECK(health.status == 200);
    CHECK(health.body == "ok");
    const auto page = support::http_get("127.0.0.1", port, "/index.html");
    CHECK(page.status == 200);
    CHECK(page.body == "<html>hi</html>");
    CHECK(support::http_get("127.0.0.1", port, "/nope").status == 404);
    CHECK(support::http_get("127.0.0.1", port, "/../etc/passwd").status == 404);
  }
  SUBCASE("websocket round trip") {
    support::WsClient client("127.0.0.1", port);
    client.send({{"type", "hello"}});
    const json config = client.receive();
    CHECK(config["type"] == "config");
    CHECK(config["channels"].size() == 3);
    client.send({{"type", "select"}, {"channels", {"ST"}}});
    CHECK(client.receive()["type"] == "ack");
    for (std::int64_t ts : {1000, 2000, 3000}) {
      client.send(frame_message(ts));
      const json reply = client.receive();
      CHECK(reply["type"] == "atlas");
      CHECK(reply["ts"] == ts);
      CHECK(reply["points"].size() == 4);
    }
    client.send_text("garbage");
    CHECK(client.receive()["type"] == "error");
  }
  SUBCASE("burst of frames: every frame answered, timestamps increase") {
    support::WsClient client("127.0.0.1", port);
    const std::string base = frame_message(0).dump();
    json f = json::parse(base);
    for (int i = 1; i <= 20; ++i) {
      f["ts"] = i;
      client.send(f);
    }
    std::int64_t prev = 0;
    int answered = 0;
    while (answered < 20) {
      const json r = client.receive();
      REQUIRE(r.contains("ts"));
      CHECK(r["ts"].get<std::int64_t>() > prev);
      prev = r["ts"];
      ++answered;
      if (prev == 20) break;
    }
    CHECK(prev == 20);
  }
  SUBCASE("a busy port is reported") {
    ServerOptions same = opts;
    same.port = port;
    CHECK_THROWS_AS(Server(engine, same), PortInUse);
  }
  server.stop();
  runner.join();
  std::filesystem::remove_all(dir);
}
