#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "beaconsync/anchor_store.hpp"

namespace httplib {
class Server;
}

namespace beaconsync {

/// Path that accepts POSTed request objects.
inline constexpr const char* kStoreRpcPath = "/v1/rpc";

/// Executes one JSON request against `store`.
///
/// Requests are objects with an "op" field; see docs/store_protocol.md. Every
/// failure comes back as {"error": code, "detail": ...} rather than throwing.
nlohmann::json handle_store_request(AnchorStore& store, const nlohmann::json& request);

/// Same as above for a raw request body; malformed JSON yields a BadRequest reply.
std::string handle_store_request(AnchorStore& store, const std::string& body);

/// HTTP front end for an AnchorStore. Each request runs on the server's worker
/// pool; the store's own locking serializes mutations.
class StoreServer {
 public:
  explicit StoreServer(AnchorStore& store);
  ~StoreServer();
  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  /// Binds to `host`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

/// Blocking client for the store wire protocol.
class StoreClient {
 public:
  StoreClient(std::string host, int port);

  /// Sends the request and returns the decoded reply. Throws IoError when the
  /// server is unreachable; protocol errors come back as error objects.
  nlohmann::json call(const nlohmann::json& request) const;

 private:
  std::string host_;
  int port_;
};

}  // namespace beaconsync
