#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "faceatlas/pipeline.hpp"

namespace faceatlas {

using Clock = std::chrono::steady_clock;

DurationSummary summarize(std::vector<double> samples) {
  DurationSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median_us = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_us = samples[std::clamp<std::size_t>(rank, 1, n) - 1];
  s.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  return s;
}

void StageRecorder::add(const StageTimes& stages, double end_to_end_us) {
  hairline_.push_back(stages.hairline_us);
  alignment_.push_back(stages.alignment_us);
  evaluation_.push_back(stages.evaluation_us);
  e2e_.push_back(end_to_end_us);
}

StageTiming StageRecorder::summary() const {
  return {summarize(hairline_), summarize(alignment_), summarize(evaluation_), summarize(e2e_)};
}

nlohmann::json to_json(const DurationSummary& d) {
  return {{"count", d.count}, {"median_us", d.median_us}, {"p95_us", d.p95_us}, {"mean_us", d.mean_us}};
}

nlohmann::json to_json(const StageTiming& t) {
  return {{"hairline", to_json(t.hairline)},
          {"alignment", to_json(t.alignment)},
          {"evaluation", to_json(t.evaluation)},
          {"end_to_end", to_json(t.end_to_end)}};
}

nlohmann::json to_json(const RunSummary& s) {
  return {{"admitted", s.admitted},
          {"dropped", s.dropped},
          {"completed", s.completed},
          {"malformed", s.malformed},
          {"degenerate", s.degenerate},
          {"peak_in_flight", s.peak_in_flight},
          {"wall_seconds", s.wall_seconds},
          {"completed_per_second", s.completed_per_second},
          {"timing", to_json(s.timing)}};
}

SimulationResult simulate_stream(std::span<const std::int64_t> arrivals,
                                 const std::function<std::int64_t(std::int64_t)>& service_time,
                                 std::size_t max_in_flight) {
  constexpr auto kNever = std::numeric_limits<std::int64_t>::max();
  SimulationResult r;
  FlowLimiter<std::int64_t> limiter(max_in_flight);
  std::deque<std::int64_t> queue;  // admitted, not yet started
  std::optional<std::int64_t> busy;
  std::int64_t busy_until = kNever;
  std::size_t next = 0;

  const auto record = [&](std::int64_t t, SimEvent::Kind kind, std::int64_t item) {
    if (limiter.in_flight() > max_in_flight) {
      throw std::logic_error("FlowLimiter exceeded its in-flight cap");
    }
    r.peak_in_flight = std::max(r.peak_in_flight, limiter.in_flight());
    r.events.push_back({t, kind, item, limiter.in_flight()});
  };
  const auto start_next = [&](std::int64_t now) {
    if (busy || queue.empty()) return;
    busy = queue.front();
    queue.pop_front();
    busy_until = now + service_time(*busy);
  };

  while (busy || next < arrivals.size()) {
    const std::int64_t arrival = next < arrivals.size() ? arrivals[next] : kNever;
    if (busy && busy_until <= arrival) {
      const std::int64_t now = busy_until;
      const std::int64_t done = *busy;
      busy.reset();
      busy_until = kNever;
      r.processed.push_back(done);
      if (auto promoted = limiter.complete()) queue.push_back(*promoted);
      record(now, SimEvent::Kind::Completion, done);
      start_next(now);
      continue;
    }
    const std::int64_t now = arrival;
    auto offer = limiter.offer(arrivals[next]);
    if (offer.admitted) queue.push_back(*offer.admitted);
    if (offer.displaced) r.dropped_items.push_back(*offer.displaced);
    record(now, SimEvent::Kind::Arrival, arrivals[next]);
    ++next;
    if (next == arrivals.size()) {
      if (auto discarded = limiter.close()) r.dropped_items.push_back(*discarded);
      record(now, SimEvent::Kind::Close, -1);
    }
    start_next(now);
  }
  r.admitted = limiter.admitted();
  r.dropped = limiter.dropped();
  r.completed = limiter.completed();
  return r;
}

RunSummary run_stream(const FrameSource& source, const AtlasProgram& program,
                      const SemanticsConfig& cfg, const RunOptions& options, const AtlasSink& sink) {
  struct Job {
    LandmarkFrame frame;
    Clock::time_point arrived;
  };

  RunSummary summary;
  FlowLimiter<Job> limiter(options.max_in_flight);
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Job> queue;
  bool closed = false;
  StageRecorder recorder;
  std::size_t degenerate = 0;
  std::mutex error_mu;
  std::exception_ptr failure;

  const auto check_cap = [&] {
    if (limiter.in_flight() > limiter.max_in_flight()) {
      throw std::logic_error("FlowLimiter exceeded its in-flight cap");
    }
    summary.peak_in_flight = std::max(summary.peak_in_flight, limiter.in_flight());
  };

  std::thread processor([&] {
    std::unique_lock lock(mu);
    while (true) {
      cv.wait(lock, [&] { return !queue.empty() || (closed && limiter.in_flight() == 0); });
      if (queue.empty()) break;
      Job job = std::move(queue.front());
      queue.pop_front();
      lock.unlock();

      StageTimes stages;
      bool was_degenerate = false;
      try {
        const EvaluatedAtlas atlas = evaluate_atlas(program, job.frame, cfg, nullptr, &stages);
        was_degenerate = atlas.degenerate;
        if (sink) sink(atlas);
      } catch (...) {
        std::lock_guard guard(error_mu);
        if (!failure) failure = std::current_exception();
      }
      const double e2e =
          std::chrono::duration<double, std::micro>(Clock::now() - job.arrived).count();

      lock.lock();
      recorder.add(stages, e2e);
      if (was_degenerate) ++degenerate;
      if (auto promoted = limiter.complete()) queue.push_back(std::move(*promoted));
      check_cap();
    }
  });

  const auto start = Clock::now();
  std::optional<std::int64_t> first_ts;
  std::optional<std::int64_t> last_ts;
  try {
    while (auto item = source()) {
      if (!item->frame) {
        std::lock_guard lock(mu);
        ++summary.malformed;
        continue;
      }
      LandmarkFrame& frame = *item->frame;
      if (last_ts && frame.timestamp_us <= *last_ts) {
        std::lock_guard lock(mu);
        ++summary.malformed;
        continue;
      }
      last_ts = frame.timestamp_us;
      if (!first_ts) first_ts = frame.timestamp_us;
      if (options.paced) {
        const double offset_us =
            static_cast<double>(frame.timestamp_us - *first_ts) / std::max(options.speed, 1e-9);
        std::this_thread::sleep_until(start + std::chrono::microseconds(static_cast<std::int64_t>(offset_us)));
      }
      std::lock_guard lock(mu);
      auto offer = limiter.offer(Job{std::move(frame), Clock::now()});
      if (offer.admitted) {
        queue.push_back(std::move(*offer.admitted));
        cv.notify_one();
      }
      check_cap();
    }
  } catch (...) {
    {
      std::lock_guard lock(mu);
      limiter.close();
      closed = true;
    }
    cv.notify_one();
    processor.join();
    throw;
  }
  {
    std::lock_guard lock(mu);
    limiter.close();
    closed = true;
  }
  cv.notify_one();
  processor.join();
  if (failure) std::rethrow_exception(failure);

  summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  summary.admitted = limiter.admitted();
  summary.dropped = limiter.dropped();
  summary.completed = limiter.completed();
  summary.degenerate = degenerate;
  summary.timing = recorder.summary();
  summary.completed_per_second =
      summary.wall_seconds > 0 ? static_cast<double>(summary.completed) / summary.wall_seconds : 0.0;
  return summary;
}

}  // namespace faceatlas
