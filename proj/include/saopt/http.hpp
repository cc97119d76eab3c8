#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "saopt/adapter.hpp"
#include "saopt/store.hpp"

namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace saopt {

class MalformedBody : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The wire format is observation_to_json from store.hpp. Values that are not
// numbers land in `errors` as "<section>.<name>: ..."; anything that is not an
// observation object at all throws MalformedBody.
Observation parse_wire_observation(const std::string& body, std::vector<std::string>& errors);

std::string ack_to_json(const IngestAck& ack);
IngestAck ack_from_json(const std::string& body);
// {"seq": n, "strategy": s, "parameters": {...}}
std::string snapshot_to_json(const AdaptationSnapshot& snap);
AdaptationSnapshot snapshot_from_json(const std::string& body);
std::string health_to_json(const HealthStatus& h);

// POST /observations, GET /adaptations[?processed=n], GET /health.
// With `processed`, GET /adaptations waits until that many observations went
// through the loop, so a client can read the decision its observation caused.
class HttpServer {
 public:
  // port 0 binds an ephemeral port.
  HttpServer(AdaptationService& service, const std::string& host = "127.0.0.1", int port = 0);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const { return port_; }
  void stop();

 private:
  AdaptationService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

class HttpClient {
 public:
  HttpClient(const std::string& host, int port, std::chrono::seconds timeout = std::chrono::seconds(30));
  ~HttpClient();

  IngestAck post_observation(const Observation& obs);
  AdaptationSnapshot adaptation();
  AdaptationSnapshot adaptation_after(std::size_t processed);
  std::string health();

 private:
  std::string get(const std::string& path);
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace saopt
