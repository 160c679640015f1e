#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "beaconsync/pose.hpp"

namespace beaconsync {

/// One year; the upper bound on an anchor's time-to-live.
inline constexpr std::int64_t kMaxTtlSeconds = 31'536'000;
/// Largest accepted map blob (16 MiB).
inline constexpr std::size_t kMaxMapBytes = std::size_t{16} << 20;

struct RoomScope {
  std::string room_id;
  bool operator==(const RoomScope&) const = default;
};

/// Beacon-scoped records carry a RelativeTransform payload.
struct BeaconScope {
  std::string beacon_id;
  bool operator==(const BeaconScope&) const = default;
};

using AnchorScope = std::variant<RoomScope, BeaconScope>;

struct AnchorRecord {
  std::string anchor_id;
  AnchorScope scope;
  PoseArray payload{};
  std::optional<Vec3> approx_position;
  double created_at = 0.0;
  std::int64_t ttl_seconds = 0;

  double expires_at() const { return created_at + static_cast<double>(ttl_seconds); }
  bool expired(double now) const { return expires_at() <= now; }
};

struct MapBlob {
  std::string room_id;
  std::int64_t version = 0;
  std::vector<std::uint8_t> bytes;
  double updated_at = 0.0;
};

struct NearFilter {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

struct MapDownload {
  std::vector<std::uint8_t> bytes;
  std::int64_t version = 0;
};

/// Shared persistence for both synchronization styles: anchor records with a
/// TTL, scoped to a room or a beacon, and per-room map blobs guarded by
/// optimistic versioning.
///
/// Thread-safe. Mutations take an exclusive lock, so all writes to one room
/// or anchor are serialized; queries share the lock.
class AnchorStore {
 public:
  /// Anchor ids come from a seeded 128-bit generator so simulated runs stay
  /// reproducible. The default constructor seeds from std::random_device.
  AnchorStore();
  explicit AnchorStore(std::uint64_t id_seed);

  /// Throws TtlExceedsCap or InvalidPayload.
  std::string host_anchor(const AnchorScope& scope, const PoseArray& payload,
                          const std::optional<Vec3>& approx_position, std::int64_t ttl_seconds, double now);

  /// Unexpired anchors in `scope`, ordered by created_at then anchor_id. With a
  /// near filter, records lacking approx_position are excluded.
  std::vector<std::string> list_anchors(const AnchorScope& scope, const std::optional<NearFilter>& near,
                                        double now) const;

  /// Throws NotFound; with `now`, also Expired.
  AnchorRecord get_anchor(const std::string& anchor_id, std::optional<double> now = std::nullopt) const;

  /// The new TTL is measured from created_at. Throws NotFound, Expired, TtlExceedsCap.
  void extend_ttl(const std::string& anchor_id, std::int64_t new_ttl_seconds, double now);

  std::size_t purge_expired(double now);

  /// Replaces the room's blob when `expected_version` matches the current one
  /// (0 when the room has none). Throws VersionConflict or MapTooLarge.
  std::int64_t upload_map(const std::string& room_id, std::vector<std::uint8_t> bytes,
                          std::int64_t expected_version, double now);

  /// Throws NoMap.
  MapDownload download_map(const std::string& room_id) const;

  std::size_t anchor_count() const;

  /// Every record and map blob currently held, including expired records that
  /// have not been purged yet.
  nlohmann::json snapshot() const;
  /// Replaces the store contents; throws BadRequest on a malformed snapshot.
  void restore(const nlohmann::json& snapshot);

  /// Writes the snapshot to a temporary sibling and renames it over `path`.
  /// Throws IoError.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::string next_anchor_id();

  mutable std::shared_mutex mutex_;
  std::mt19937_64 id_rng_;
  std::map<std::string, AnchorRecord> anchors_;
  std::map<std::string, MapBlob> maps_;
};

nlohmann::json scope_to_json(const AnchorScope& scope);
AnchorScope scope_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const AnchorRecord& record);
AnchorRecord record_from_json(const nlohmann::json& j);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws BadRequest on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace beaconsync
