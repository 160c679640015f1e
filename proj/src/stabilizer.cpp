#include "beaconsync/stabilizer.hpp"

#include <cmath>
#include <string>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

// Slack on time comparisons so timestamps built as t0 + k*dt still land on
// the intended boundary.
constexpr double kTimeSlack = 1e-9;

}  // namespace

void StabilizerConfig::validate() const {
  if (!(disparity_threshold > 0.0)) throw ConfigInvalid("stabilizer.disparity_threshold must be > 0");
  if (!(stable_duration > 0.0)) throw ConfigInvalid("stabilizer.stable_duration must be > 0");
  if (!(timeout > stable_duration)) throw ConfigInvalid("stabilizer.timeout must exceed stable_duration");
}

UwbStabilizer::UwbStabilizer(StabilizerConfig config) : config_(config) { config_.validate(); }

void UwbStabilizer::reset() {
  state_ = StabilizerState{};
  first_timestamp_.reset();
  run_start_.reset();
  run_.clear();
}

const StabilizerState& UwbStabilizer::push(const RangingSample& sample) {
  if (state_.terminal()) throw PushAfterTerminal("stabilizer already reached a terminal state");
  if (!run_.empty() && sample.timestamp < run_.back().timestamp) {
    throw OutOfOrderSample("timestamp " + std::to_string(sample.timestamp) + " precedes " +
                           std::to_string(run_.back().timestamp));
  }

  if (!first_timestamp_) first_timestamp_ = sample.timestamp;

  if (run_.empty() || (sample.position - run_.back().position).norm() > config_.disparity_threshold) {
    run_.clear();
    run_start_ = sample.timestamp;
  }
  run_.push_back(sample);

  const double window_start = sample.timestamp - config_.stable_duration;
  while (run_.size() > 1 && run_.front().timestamp < window_start - kTimeSlack) run_.pop_front();

  if (run_.size() >= 2 && sample.timestamp - *run_start_ >= config_.stable_duration - kTimeSlack) {
    Vec3 sum = Vec3::Zero();
    for (const auto& s : run_) sum += s.position;
    state_.phase = StabilizerPhase::Stable;
    state_.position = sum / static_cast<double>(run_.size());
    state_.stabilized_at = sample.timestamp;
    return state_;
  }

  if (sample.timestamp - *first_timestamp_ > config_.timeout) state_.phase = StabilizerPhase::TimedOut;
  return state_;
}

}  // namespace beaconsync
