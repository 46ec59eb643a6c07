#include <algorithm>

#include "faceatlas/frame_io.hpp"
#include "faceatlas/service.hpp"

namespace faceatlas {

using nlohmann::json;

std::shared_ptr<const Engine> make_engine(AtlasProgram program, SemanticsConfig semantics,
                                          std::vector<ChannelSpec> channels) {
  semantics.validate();
  channels = bind_channels(std::move(channels), program);
  return std::make_shared<const Engine>(
      Engine{std::move(program), std::move(semantics), std::move(channels)});
}

json config_message(const Engine& engine, std::string_view session_id, std::size_t max_in_flight) {
  json points = json::array();
  for (const auto& p : engine.program.points()) {
    points.push_back({{"id", p.def.id.str()},
                      {"name", p.def.name_en},
                      {"channel", p.def.id.channel},
                      {"region", p.def.region},
                      {"symmetric", p.def.is_symmetric},
                      {"class", std::string(to_string(p.complexity))}});
  }
  json channels = json::array();
  for (const auto& c : engine.channels) {
    json flow = json::array();
    for (const auto& id : c.flow) flow.push_back(id.str());
    channels.push_back(
        {{"code", c.code}, {"name", c.display_name}, {"color", c.color_hint.hex()}, {"flow", flow}});
  }
  return {{"type", "config"},
          {"session", session_id},
          {"max_in_flight", max_in_flight},
          {"points", std::move(points)},
          {"channels", std::move(channels)}};
}

json error_message(std::string_view reason) { return {{"type", "error"}, {"reason", reason}}; }

json evaluate_job(const Engine& engine, const Session::Job& job) {
  try {
    const EvaluatedAtlas atlas =
        evaluate_atlas(engine.program, job.frame, engine.semantics, &job.selection.mask);
    json reply = to_json(atlas);
    reply["type"] = "atlas";
    json polylines = json::array();
    if (!atlas.degenerate) {
      for (const auto& spec : engine.channels) {
        const auto& sel = job.selection.channels;
        if (std::find(sel.begin(), sel.end(), spec.code) == sel.end()) continue;
        for (const auto& line : channel_polylines(spec, engine.program, atlas)) {
          polylines.push_back(to_json(line));
        }
      }
    }
    reply["polylines"] = std::move(polylines);
    return reply;
  } catch (const std::exception& e) {
    json reply = error_message(e.what());
    reply["ts"] = job.ts;
    return reply;
  }
}

Session::Session(std::shared_ptr<const Engine> engine, std::string id, std::size_t max_in_flight)
    : engine_(std::move(engine)),
      id_(std::move(id)),
      selection_(select_channels({}, engine_->program)),
      limiter_(max_in_flight) {}

std::size_t Session::held_replies() const {
  std::size_t n = 0;
  for (const auto& [ts, reply] : pending_) n += reply.has_value();
  return n;
}

Session::Step Session::handle_message(std::string_view text) {
  Step step;
  const json msg = json::parse(text.begin(), text.end(), nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) {
    ++counters_.errors;
    step.replies.push_back(error_message("message is not a JSON object"));
    return step;
  }
  const auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) {
    ++counters_.errors;
    step.replies.push_back(error_message("message has no \"type\""));
    return step;
  }
  const auto& t = type->get_ref<const std::string&>();
  if (t == "hello") {
    step.replies.push_back(config_message(*engine_, id_, limiter_.max_in_flight()));
    return step;
  }
  if (t == "select") return on_select(msg);
  if (t == "frame") return on_frame(msg);
  ++counters_.errors;
  step.replies.push_back(error_message("unknown message type \"" + t + "\""));
  return step;
}

Session::Step Session::on_select(const json& msg) {
  Step step;
  const auto it = msg.find("channels");
  std::set<std::string> codes;
  bool ok = it != msg.end() && it->is_array();
  if (ok) {
    for (const auto& c : *it) {
      if (!c.is_string()) {
        ok = false;
        break;
      }
      codes.insert(c.get<std::string>());
    }
  }
  if (!ok) {
    ++counters_.errors;
    step.replies.push_back(error_message("\"channels\" must be an array of channel codes"));
    return step;
  }
  selection_ = select_channels(codes, engine_->program);
  step.replies.push_back(
      {{"type", "ack"}, {"channels", selection_.channels}, {"unknown", selection_.unknown}});
  return step;
}

Session::Step Session::on_frame(const json& msg) {
  Step step;
  LandmarkFrame frame;
  try {
    frame = frame_from_json(msg);
  } catch (const std::exception& e) {
    ++counters_.errors;
    step.replies.push_back(error_message(e.what()));
    return step;
  }
  if (last_ts_ && frame.timestamp_us <= *last_ts_) {
    ++counters_.errors;
    step.replies.push_back(error_message("frame timestamps must strictly increase"));
    return step;
  }
  last_ts_ = frame.timestamp_us;
  ++counters_.frames;

  const std::int64_t ts = frame.timestamp_us;
  auto offer = limiter_.offer(Job{ts, std::move(frame), selection_});
  if (offer.admitted) {
    ++counters_.admitted;
    pending_.emplace(ts, std::nullopt);
    step.start.push_back(std::move(*offer.admitted));
  }
  if (offer.displaced) {
    ++counters_.dropped;
    pending_[offer.displaced->ts] = json{{"type", "dropped"}, {"ts", offer.displaced->ts}};
  }
  release(step);
  return step;
}

Session::Step Session::complete(std::int64_t ts, json atlas_reply) {
  auto it = pending_.find(ts);
  if (it == pending_.end() || it->second) {
    throw std::logic_error("completion for a frame that is not in flight");
  }
  it->second = std::move(atlas_reply);
  ++counters_.completed;
  Step step;
  if (auto promoted = limiter_.complete()) {
    ++counters_.admitted;
    pending_.emplace(promoted->ts, std::nullopt);
    step.start.push_back(std::move(*promoted));
  }
  release(step);
  return step;
}

void Session::release(Step& step) {
  while (!pending_.empty() && pending_.begin()->second) {
    step.replies.push_back(std::move(*pending_.begin()->second));
    pending_.erase(pending_.begin());
  }
}

}  // namespace faceatlas
