#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace faceatlas {

inline constexpr std::size_t kUnlimitedInFlight = std::numeric_limits<std::size_t>::max();

/// Admission control for a real-time stream. At most `max_in_flight` items
/// are admitted but not completed; one further item may wait, and a newer
/// arrival replaces it (newest wins, the replaced item is dropped). Closing
/// the limiter at end of stream discards a still-waiting item.
///
/// Not thread-safe; callers serialize access.
template <class T>
class FlowLimiter {
 public:
  explicit FlowLimiter(std::size_t max_in_flight = 1) : max_in_flight_(max_in_flight) {
    if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be positive");
  }

  struct Offer {
    std::optional<T> admitted;   // caller now owns processing of this item
    std::optional<T> displaced;  // previous waiter, now dropped
  };

  Offer offer(T item) {
    Offer out;
    if (in_flight_ < max_in_flight_) {
      ++in_flight_;
      ++admitted_;
      out.admitted = std::move(item);
      return out;
    }
    if (waiting_) {
      ++dropped_;
      out.displaced = std::move(waiting_);
    }
    waiting_ = std::move(item);
    return out;
  }

  /// Marks one in-flight item finished; returns the waiter if it was
  /// admitted in its place.
  std::optional<T> complete() {
    if (in_flight_ == 0) throw std::logic_error("FlowLimiter::complete with nothing in flight");
    --in_flight_;
    ++completed_;
    if (!waiting_) return std::nullopt;
    ++in_flight_;
    ++admitted_;
    std::optional<T> promoted = std::move(waiting_);
    waiting_.reset();
    return promoted;
  }

  /// End of stream: drops the waiter, if any, and returns it.
  std::optional<T> close() {
    if (!waiting_) return std::nullopt;
    ++dropped_;
    std::optional<T> out = std::move(waiting_);
    waiting_.reset();
    return out;
  }

  std::size_t max_in_flight() const { return max_in_flight_; }
  std::size_t in_flight() const { return in_flight_; }
  bool has_waiting() const { return waiting_.has_value(); }
  const std::optional<T>& waiting() const { return waiting_; }
  std::size_t admitted() const { return admitted_; }
  std::size_t dropped() const { return dropped_; }
  std::size_t completed() const { return completed_; }

 private:
  std::size_t max_in_flight_;
  std::size_t in_flight_ = 0;
  std::size_t admitted_ = 0;
  std::size_t dropped_ = 0;
  std::size_t completed_ = 0;
  std::optional<T> waiting_;
};

}  // namespace faceatlas
