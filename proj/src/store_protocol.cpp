#include "beaconsync/store_protocol.hpp"

#include <httplib.h>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

using nlohmann::json;

template <typename T>
T field(const json& request, const char* key) {
  if (!request.contains(key)) throw BadRequest(std::string("missing field '") + key + "'");
  try {
    return request.at(key).get<T>();
  } catch (const json::exception&) {
    throw BadRequest(std::string("field '") + key + "' has the wrong type");
  }
}

Vec3 vec3_field(const json& request, const char* key) {
  const auto a = field<std::array<double, 3>>(request, key);
  return {a[0], a[1], a[2]};
}

json host_anchor(AnchorStore& store, const json& req) {
  std::optional<Vec3> approx;
  if (req.contains("approx_position") && !req.at("approx_position").is_null()) {
    approx = vec3_field(req, "approx_position");
  }
  const auto id = store.host_anchor(scope_from_json(field<json>(req, "scope")), field<PoseArray>(req, "payload"),
                                    approx, field<std::int64_t>(req, "ttl_seconds"), field<double>(req, "now"));
  return {{"anchor_id", id}};
}

json list_anchors(AnchorStore& store, const json& req) {
  std::optional<NearFilter> near;
  if (req.contains("near") && !req.at("near").is_null()) {
    const json& n = req.at("near");
    if (!n.is_object()) throw BadRequest("field 'near' must be an object");
    near = NearFilter{vec3_field(n, "center"), field<double>(n, "radius")};
  }
  return {{"anchor_ids", store.list_anchors(scope_from_json(field<json>(req, "scope")), near,
                                            field<double>(req, "now"))}};
}

json get_anchor(AnchorStore& store, const json& req) {
  std::optional<double> now;
  if (req.contains("now")) now = field<double>(req, "now");
  return record_to_json(store.get_anchor(field<std::string>(req, "anchor_id"), now));
}

json extend_ttl(AnchorStore& store, const json& req) {
  store.extend_ttl(field<std::string>(req, "anchor_id"), field<std::int64_t>(req, "ttl_seconds"),
                   field<double>(req, "now"));
  return json::object();
}

json upload_map(AnchorStore& store, const json& req) {
  const auto version = store.upload_map(field<std::string>(req, "room_id"),
                                        base64_decode(field<std::string>(req, "bytes")),
                                        field<std::int64_t>(req, "expected_version"), field<double>(req, "now"));
  return {{"version", version}};
}

json download_map(AnchorStore& store, const json& req) {
  const auto map = store.download_map(field<std::string>(req, "room_id"));
  return {{"bytes", base64_encode(map.bytes)}, {"version", map.version}};
}

json purge_expired(AnchorStore& store, const json& req) {
  return {{"purged", store.purge_expired(field<double>(req, "now"))}};
}

json error_reply(const std::string& code, json detail) { return {{"error", code}, {"detail", std::move(detail)}}; }

}  // namespace

json handle_store_request(AnchorStore& store, const json& request) {
  try {
    if (!request.is_object()) throw BadRequest("request must be a JSON object");
    const auto op = field<std::string>(request, "op");
    if (op == "host_anchor") return host_anchor(store, request);
    if (op == "list_anchors") return list_anchors(store, request);
    if (op == "get_anchor") return get_anchor(store, request);
    if (op == "extend_ttl") return extend_ttl(store, request);
    if (op == "upload_map") return upload_map(store, request);
    if (op == "download_map") return download_map(store, request);
    if (op == "purge_expired") return purge_expired(store, request);
    throw BadRequest("unknown op '" + op + "'");
  } catch (const VersionConflict& e) {
    return error_reply(e.code(), {{"current_version", e.current_version()}});
  } catch (const Error& e) {
    return error_reply(e.code(), e.detail());
  }
}

std::string handle_store_request(AnchorStore& store, const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply("BadRequest", std::string("malformed JSON: ") + e.what()).dump();
  }
  return handle_store_request(store, request).dump();
}

StoreServer::StoreServer(AnchorStore& store) : server_(std::make_unique<httplib::Server>()) {
  server_->Post(kStoreRpcPath, [&store](const httplib::Request& req, httplib::Response& res) {
    res.set_content(handle_store_request(store, req.body), "application/json");
  });
}

StoreServer::~StoreServer() { stop(); }

int StoreServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void StoreServer::listen() { server_->listen_after_bind(); }

void StoreServer::stop() {
  if (server_) server_->stop();
}

StoreClient::StoreClient(std::string host, int port) : host_(std::move(host)), port_(port) {}

json StoreClient::call(const json& request) const {
  httplib::Client client(host_, port_);
  auto res = client.Post(kStoreRpcPath, request.dump(), "application/json");
  if (!res) throw IoError("store at " + host_ + ":" + std::to_string(port_) + " is unreachable");
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw IoError(std::string("store replied with malformed JSON: ") + e.what());
  }
}

}  // namespace beaconsync
