#include "beaconsync/anchor_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <tuple>

#include <fmt/format.h>
#include <sodium.h>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

constexpr const char* kSnapshotFormat = "beaconsync.store/1";

void check_ttl(std::int64_t ttl_seconds) {
  if (ttl_seconds > kMaxTtlSeconds) {
    throw TtlExceedsCap(fmt::format("ttl {} s exceeds the {} s cap", ttl_seconds, kMaxTtlSeconds));
  }
  if (ttl_seconds <= 0) throw TtlExceedsCap(fmt::format("ttl {} s must be positive", ttl_seconds));
}

void check_payload(const PoseArray& payload) {
  try {
    (void)RigidPose::from_array(payload);
  } catch (const InvalidPose& e) {
    throw InvalidPayload(e.detail());
  }
}

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw BadRequest(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw BadRequest(fmt::format("field '{}' has the wrong type", key));
  }
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  constexpr int kVariant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), kVariant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), kVariant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw BadRequest("malformed base64");
  }
  out.resize(len);
  return out;
}

nlohmann::json scope_to_json(const AnchorScope& scope) {
  if (const auto* room = std::get_if<RoomScope>(&scope)) return {{"room_id", room->room_id}};
  return {{"beacon_id", std::get<BeaconScope>(scope).beacon_id}};
}

AnchorScope scope_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw BadRequest("scope must be an object");
  const bool room = j.contains("room_id");
  const bool beacon = j.contains("beacon_id");
  if (room == beacon) throw BadRequest("scope needs exactly one of 'room_id' or 'beacon_id'");
  if (room) return RoomScope{require<std::string>(j, "room_id")};
  return BeaconScope{require<std::string>(j, "beacon_id")};
}

nlohmann::json record_to_json(const AnchorRecord& record) {
  nlohmann::json j = {
      {"anchor_id", record.anchor_id},
      {"scope", scope_to_json(record.scope)},
      {"payload", record.payload},
      {"created_at", record.created_at},
      {"ttl_seconds", record.ttl_seconds},
  };
  if (record.approx_position) {
    const Vec3& p = *record.approx_position;
    j["approx_position"] = {p.x(), p.y(), p.z()};
  }
  return j;
}

AnchorRecord record_from_json(const nlohmann::json& j) {
  AnchorRecord r;
  r.anchor_id = require<std::string>(j, "anchor_id");
  r.scope = scope_from_json(require<nlohmann::json>(j, "scope"));
  r.payload = require<PoseArray>(j, "payload");
  r.created_at = require<double>(j, "created_at");
  r.ttl_seconds = require<std::int64_t>(j, "ttl_seconds");
  if (j.contains("approx_position")) {
    const auto p = require<std::array<double, 3>>(j, "approx_position");
    r.approx_position = Vec3(p[0], p[1], p[2]);
  }
  return r;
}

AnchorStore::AnchorStore() : AnchorStore(random_seed()) {}

AnchorStore::AnchorStore(std::uint64_t id_seed) : id_rng_(id_seed) {
  if (sodium_init() < 0) throw Error("SodiumInit", "libsodium failed to initialize");
}

std::string AnchorStore::next_anchor_id() {
  for (;;) {
    const std::uint64_t hi = id_rng_();
    const std::uint64_t lo = id_rng_();
    std::string id = fmt::format("{:016x}{:016x}", hi, lo);
    if (!anchors_.contains(id)) return id;
  }
}

std::string AnchorStore::host_anchor(const AnchorScope& scope, const PoseArray& payload,
                                     const std::optional<Vec3>& approx_position, std::int64_t ttl_seconds,
                                     double now) {
  check_ttl(ttl_seconds);
  check_payload(payload);
  if (approx_position && !approx_position->allFinite()) throw InvalidPayload("approx_position is not finite");

  std::unique_lock lock(mutex_);
  AnchorRecord record{next_anchor_id(), scope, payload, approx_position, now, ttl_seconds};
  auto id = record.anchor_id;
  anchors_.emplace(id, std::move(record));
  return id;
}

std::vector<std::string> AnchorStore::list_anchors(const AnchorScope& scope, const std::optional<NearFilter>& near,
                                                   double now) const {
  std::shared_lock lock(mutex_);
  std::vector<const AnchorRecord*> hits;
  for (const auto& [id, record] : anchors_) {
    if (record.scope != scope || record.expired(now)) continue;
    if (near) {
      if (!record.approx_position) continue;
      if ((*record.approx_position - near->center).norm() > near->radius) continue;
    }
    hits.push_back(&record);
  }
  std::sort(hits.begin(), hits.end(), [](const AnchorRecord* a, const AnchorRecord* b) {
    return std::tie(a->created_at, a->anchor_id) < std::tie(b->created_at, b->anchor_id);
  });
  std::vector<std::string> ids;
  ids.reserve(hits.size());
  for (const auto* r : hits) ids.push_back(r->anchor_id);
  return ids;
}

AnchorRecord AnchorStore::get_anchor(const std::string& anchor_id, std::optional<double> now) const {
  std::shared_lock lock(mutex_);
  auto it = anchors_.find(anchor_id);
  if (it == anchors_.end()) throw NotFound("no anchor " + anchor_id);
  if (now && it->second.expired(*now)) throw Expired("anchor " + anchor_id + " has expired");
  return it->second;
}

void AnchorStore::extend_ttl(const std::string& anchor_id, std::int64_t new_ttl_seconds, double now) {
  std::unique_lock lock(mutex_);
  auto it = anchors_.find(anchor_id);
  if (it == anchors_.end()) throw NotFound("no anchor " + anchor_id);
  if (it->second.expired(now)) throw Expired("anchor " + anchor_id + " has expired");
  check_ttl(new_ttl_seconds);
  it->second.ttl_seconds = new_ttl_seconds;
}

std::size_t AnchorStore::purge_expired(double now) {
  std::unique_lock lock(mutex_);
  return std::erase_if(anchors_, [now](const auto& entry) { return entry.second.expired(now); });
}

std::int64_t AnchorStore::upload_map(const std::string& room_id, std::vector<std::uint8_t> bytes,
                                     std::int64_t expected_version, double now) {
  if (bytes.size() > kMaxMapBytes) {
    throw MapTooLarge(fmt::format("map of {} bytes exceeds the {} byte cap", bytes.size(), kMaxMapBytes));
  }
  std::unique_lock lock(mutex_);
  auto it = maps_.find(room_id);
  const std::int64_t current = it == maps_.end() ? 0 : it->second.version;
  if (expected_version != current) throw VersionConflict(current);
  MapBlob blob{room_id, current + 1, std::move(bytes), now};
  maps_.insert_or_assign(room_id, std::move(blob));
  return current + 1;
}

MapDownload AnchorStore::download_map(const std::string& room_id) const {
  std::shared_lock lock(mutex_);
  auto it = maps_.find(room_id);
  if (it == maps_.end()) throw NoMap("room " + room_id + " has no map");
  return {it->second.bytes, it->second.version};
}

std::size_t AnchorStore::anchor_count() const {
  std::shared_lock lock(mutex_);
  return anchors_.size();
}

nlohmann::json AnchorStore::snapshot() const {
  std::shared_lock lock(mutex_);
  nlohmann::json anchors = nlohmann::json::array();
  for (const auto& [id, record] : anchors_) anchors.push_back(record_to_json(record));
  nlohmann::json maps = nlohmann::json::array();
  for (const auto& [room, blob] : maps_) {
    maps.push_back({{"room_id", blob.room_id},
                    {"version", blob.version},
                    {"bytes", base64_encode(blob.bytes)},
                    {"updated_at", blob.updated_at}});
  }
  return {{"format", kSnapshotFormat}, {"anchors", anchors}, {"maps", maps}};
}

void AnchorStore::restore(const nlohmann::json& snapshot) {
  if (require<std::string>(snapshot, "format") != kSnapshotFormat) {
    throw BadRequest("unsupported snapshot format");
  }
  std::map<std::string, AnchorRecord> anchors;
  for (const auto& j : require<nlohmann::json>(snapshot, "anchors")) {
    auto record = record_from_json(j);
    auto id = record.anchor_id;
    anchors.emplace(std::move(id), std::move(record));
  }
  std::map<std::string, MapBlob> maps;
  for (const auto& j : require<nlohmann::json>(snapshot, "maps")) {
    MapBlob blob{require<std::string>(j, "room_id"), require<std::int64_t>(j, "version"),
                 base64_decode(require<std::string>(j, "bytes")), require<double>(j, "updated_at")};
    auto room = blob.room_id;
    maps.emplace(std::move(room), std::move(blob));
  }
  std::unique_lock lock(mutex_);
  anchors_ = std::move(anchors);
  maps_ = std::move(maps);
}

void AnchorStore::save(const std::filesystem::path& path) const {
  const std::string text = snapshot().dump();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

void AnchorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw BadRequest(std::string("snapshot is not valid JSON: ") + e.what());
  }
  restore(j);
}

}  // namespace beaconsync
