#pragma once

#include <stdexcept>
#include <string>

namespace beaconsync {

/// Base class for every failure raised by the library. `code()` is the stable
/// machine-readable name used on the wire and in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)), detail_(detail) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

#define BEACONSYNC_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& detail) : Error(#Name, detail) {}   \
  }

// pose_core
BEACONSYNC_DEFINE_ERROR(DegenerateAzimuth);
BEACONSYNC_DEFINE_ERROR(InvalidPose);

// uwb_stabilizer
BEACONSYNC_DEFINE_ERROR(OutOfOrderSample);
BEACONSYNC_DEFINE_ERROR(PushAfterTerminal);

// anchor_store
BEACONSYNC_DEFINE_ERROR(TtlExceedsCap);
BEACONSYNC_DEFINE_ERROR(InvalidPayload);
BEACONSYNC_DEFINE_ERROR(NotFound);
BEACONSYNC_DEFINE_ERROR(Expired);
BEACONSYNC_DEFINE_ERROR(NoMap);
BEACONSYNC_DEFINE_ERROR(MapTooLarge);
BEACONSYNC_DEFINE_ERROR(BadRequest);

// sim_world / eval_harness
BEACONSYNC_DEFINE_ERROR(NoRangingSlot);
BEACONSYNC_DEFINE_ERROR(ConfigInvalid);
BEACONSYNC_DEFINE_ERROR(TooFewSessions);
BEACONSYNC_DEFINE_ERROR(SchemaMismatch);
BEACONSYNC_DEFINE_ERROR(IoError);

#undef BEACONSYNC_DEFINE_ERROR

/// Optimistic-concurrency rejection; the caller must download, merge, retry.
class VersionConflict : public Error {
 public:
  explicit VersionConflict(long long current_version)
      : Error("VersionConflict", "current version is " + std::to_string(current_version)),
        current_version_(current_version) {}

  long long current_version() const noexcept { return current_version_; }

 private:
  long long current_version_;
};

}  // namespace beaconsync
