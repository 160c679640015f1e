#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace beaconsync {

/// Concurrent ranging sessions one UWB beacon can serve.
inline constexpr std::size_t kMaxConcurrentRanging = 8;

struct SlotGrant {
  bool granted = false;
  std::size_t queue_position = 0;  ///< 1-based when queued, 0 when granted
};

/// Per-beacon ranging slots with a FIFO wait queue.
class RangingScheduler {
 public:
  explicit RangingScheduler(std::size_t capacity = kMaxConcurrentRanging) : capacity_(capacity) {}

  /// Grants a slot when one is free, otherwise queues the device. Asking again
  /// returns the device's current status.
  SlotGrant acquire(const std::string& beacon_id, const std::string& device_id, double now);

  /// Frees the device's slot (or removes it from the queue) and grants the
  /// slot to the head of the queue. Returns the promoted device, if any.
  std::optional<std::string> release(const std::string& beacon_id, const std::string& device_id, double now);

  bool holds_slot(const std::string& beacon_id, const std::string& device_id) const;
  std::size_t active_count(const std::string& beacon_id) const;
  std::size_t queue_length(const std::string& beacon_id) const;
  std::size_t capacity() const { return capacity_; }

 private:
  struct BeaconSlots {
    std::set<std::string> active;
    std::deque<std::string> waiting;
  };

  std::size_t capacity_;
  std::map<std::string, BeaconSlots> beacons_;
};

}  // namespace beaconsync
