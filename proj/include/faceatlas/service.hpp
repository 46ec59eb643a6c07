#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceatlas/adl.hpp"
#include "faceatlas/channels.hpp"
#include "faceatlas/evaluator.hpp"
#include "faceatlas/flow_limiter.hpp"
#include "faceatlas/geometry.hpp"

namespace faceatlas {

/// Immutable state shared by every session.
struct Engine {
  AtlasProgram program;
  SemanticsConfig semantics;
  std::vector<ChannelSpec> channels;  // bound to `program`
};

std::shared_ptr<const Engine> make_engine(AtlasProgram program, SemanticsConfig semantics,
                                          std::vector<ChannelSpec> channels);

/// "config" reply body for a session.
nlohmann::json config_message(const Engine& engine, std::string_view session_id,
                              std::size_t max_in_flight);

/// Transport-independent protocol state for one connection.
///
/// handle_message() and complete() return the replies that became ready
/// and the frames that should start evaluating. Replies that carry a
/// timestamp are released in timestamp order, so a "dropped" for a newer
/// frame is held back until older in-flight frames have answered.
class Session {
 public:
  struct Job {
    std::int64_t ts = 0;
    LandmarkFrame frame;
    ChannelSelection selection;  // snapshot taken when the frame arrived
  };

  struct Step {
    std::vector<nlohmann::json> replies;
    std::vector<Job> start;
  };

  struct Counters {
    std::size_t frames = 0;
    std::size_t admitted = 0;
    std::size_t dropped = 0;
    std::size_t completed = 0;
    std::size_t errors = 0;
  };

  Session(std::shared_ptr<const Engine> engine, std::string id, std::size_t max_in_flight = 1);

  Step handle_message(std::string_view text);
  /// Result of a job returned earlier by a Step.
  Step complete(std::int64_t ts, nlohmann::json atlas_reply);

  const std::string& id() const { return id_; }
  const ChannelSelection& selection() const { return selection_; }
  const Counters& counters() const { return counters_; }
  std::size_t in_flight() const { return limiter_.in_flight(); }
  /// Replies waiting for an older frame to finish.
  std::size_t held_replies() const;

 private:
  Step on_frame(const nlohmann::json& msg);
  Step on_select(const nlohmann::json& msg);
  void release(Step& step);

  std::shared_ptr<const Engine> engine_;
  std::string id_;
  ChannelSelection selection_;
  FlowLimiter<Job> limiter_;
  std::optional<std::int64_t> last_ts_;
  std::map<std::int64_t, std::optional<nlohmann::json>> pending_;  // ts -> reply once ready
  Counters counters_;
};

/// Evaluates a job and builds its "atlas" reply (points plus polylines of
/// the selected channels). Safe to call from any thread.
nlohmann::json evaluate_job(const Engine& engine, const Session::Job& job);

nlohmann::json error_message(std::string_view reason);

class PortInUse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::string static_dir;     // optional; served for GET requests
  std::size_t max_in_flight = 1;
  std::size_t workers = 2;
};

/// WebSocket + HTTP endpoint on one port. GET /healthz answers "ok"; any
/// upgrade request becomes a protocol session.
class Server {
 public:
  /// Binds immediately; throws PortInUse when the address is taken.
  Server(std::shared_ptr<const Engine> engine, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  /// Blocks until stop() or SIGINT/SIGTERM when `handle_signals`.
  void run(bool handle_signals = false);
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace faceatlas
