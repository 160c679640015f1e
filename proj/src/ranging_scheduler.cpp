#include "beaconsync/ranging_scheduler.hpp"

#include <algorithm>

namespace beaconsync {

SlotGrant RangingScheduler::acquire(const std::string& beacon_id, const std::string& device_id, double /*now*/) {
  auto& slots = beacons_[beacon_id];
  if (slots.active.contains(device_id)) return {true, 0};
  auto it = std::find(slots.waiting.begin(), slots.waiting.end(), device_id);
  if (it != slots.waiting.end()) {
    return {false, static_cast<std::size_t>(it - slots.waiting.begin()) + 1};
  }
  if (slots.active.size() < capacity_ && slots.waiting.empty()) {
    slots.active.insert(device_id);
    return {true, 0};
  }
  slots.waiting.push_back(device_id);
  return {false, slots.waiting.size()};
}

std::optional<std::string> RangingScheduler::release(const std::string& beacon_id, const std::string& device_id,
                                                     double /*now*/) {
  auto found = beacons_.find(beacon_id);
  if (found == beacons_.end()) return std::nullopt;
  auto& slots = found->second;
  if (slots.active.erase(device_id) == 0) {
    std::erase(slots.waiting, device_id);
    return std::nullopt;
  }
  if (slots.waiting.empty() || slots.active.size() >= capacity_) return std::nullopt;
  std::string next = slots.waiting.front();
  slots.waiting.pop_front();
  slots.active.insert(next);
  return next;
}

bool RangingScheduler::holds_slot(const std::string& beacon_id, const std::string& device_id) const {
  auto it = beacons_.find(beacon_id);
  return it != beacons_.end() && it->second.active.contains(device_id);
}

std::size_t RangingScheduler::active_count(const std::string& beacon_id) const {
  auto it = beacons_.find(beacon_id);
  return it == beacons_.end() ? 0 : it->second.active.size();
}

std::size_t RangingScheduler::queue_length(const std::string& beacon_id) const {
  auto it = beacons_.find(beacon_id);
  return it == beacons_.end() ? 0 : it->second.waiting.size();
}

}  // namespace beaconsync
