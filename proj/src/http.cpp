#include "saopt/http.hpp"

#include <httplib.h>

#include <json.hpp>

namespace saopt {

using nlohmann::json;

namespace {

json values(const ValueMap& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

ValueMap read_values(const json& j, const std::string& section, std::vector<std::string>& errors) {
  if (!j.is_object()) throw MalformedBody("'" + section + "' must be an object");
  ValueMap out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      out[k] = v.get<double>();
    } else {
      errors.push_back(section + "." + k + ": expected a number, got " + std::string(v.type_name()));
    }
  }
  return out;
}

const json& member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw MalformedBody(std::string("missing '") + key + "'");
  return *it;
}

json parse(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw MalformedBody(e.what());
  }
}

}  // namespace

Observation parse_wire_observation(const std::string& body, std::vector<std::string>& errors) {
  const json j = parse(body);
  if (!j.is_object()) throw MalformedBody("body must be a JSON object");
  Observation obs;
  const json& ts = member(j, "timestamp");
  if (ts.is_number()) {
    obs.timestamp = ts.get<double>();
  } else {
    errors.push_back("timestamp: expected a number");
  }
  obs.context = read_values(member(j, "context"), "context", errors);
  obs.metrics = read_values(member(j, "metrics"), "metrics", errors);
  const json& input = member(j, "input");
  if (!input.is_object()) throw MalformedBody("'input' must be an object");
  const json& strategy = member(input, "strategy");
  if (strategy.is_string()) {
    obs.input.strategy = strategy.get<std::string>();
  } else {
    errors.push_back("input.strategy: expected a string");
  }
  obs.input.parameters = read_values(member(input, "parameters"), "input.parameters", errors);
  return obs;
}

std::string ack_to_json(const IngestAck& ack) { return json{{"accepted", ack.accepted}, {"errors", ack.errors}}.dump(); }

IngestAck ack_from_json(const std::string& body) {
  const json j = parse(body);
  IngestAck ack;
  ack.accepted = member(j, "accepted").get<bool>();
  ack.errors = member(j, "errors").get<std::vector<std::string>>();
  return ack;
}

std::string snapshot_to_json(const AdaptationSnapshot& snap) {
  return json{{"seq", snap.seq}, {"strategy", snap.decision.strategy}, {"parameters", values(snap.decision.parameters)}}.dump();
}

AdaptationSnapshot snapshot_from_json(const std::string& body) {
  const json j = parse(body);
  AdaptationSnapshot snap;
  snap.seq = member(j, "seq").get<std::size_t>();
  snap.decision.strategy = member(j, "strategy").get<std::string>();
  std::vector<std::string> errors;
  snap.decision.parameters = read_values(member(j, "parameters"), "parameters", errors);
  if (!errors.empty()) throw MalformedBody(errors.front());
  return snap;
}

std::string health_to_json(const HealthStatus& h) {
  return json{{"received", h.received}, {"processed", h.processed}, {"decisions", h.decisions}, {"running", h.running}}.dump();
}

HttpServer::HttpServer(AdaptationService& service, const std::string& host, int port)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.Post("/observations", [this](const httplib::Request& req, httplib::Response& res) {
    IngestAck ack;
    try {
      ack.errors.clear();
      auto obs = parse_wire_observation(req.body, ack.errors);
      if (ack.errors.empty()) ack = service_.ingest(obs);
      res.status = ack.accepted ? 200 : 422;
    } catch (const MalformedBody& e) {
      ack.errors = {std::string("malformed body: ") + e.what()};
      res.status = 400;
    }
    res.set_content(ack_to_json(ack), "application/json");
  });
  srv.Get("/adaptations", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.has_param("processed")) {
      std::size_t n = 0;
      try {
        n = std::stoull(req.get_param_value("processed"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(json{{"error", "processed must be a count"}}.dump(), "application/json");
        return;
      }
      if (!service_.wait_processed(n, std::chrono::seconds(20))) {
        res.status = 504;
        res.set_content(json{{"error", "observation not processed yet"}}.dump(), "application/json");
        return;
      }
    }
    res.set_content(snapshot_to_json(service_.latest()), "application/json");
  });
  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_to_json(service_.health()), "application/json");
  });

  port_ = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

HttpClient::HttpClient(const std::string& host, int port, std::chrono::seconds timeout)
    : client_(std::make_unique<httplib::Client>(host, port)) {
  client_->set_read_timeout(timeout);
  client_->set_keep_alive(true);
}

HttpClient::~HttpClient() = default;

IngestAck HttpClient::post_observation(const Observation& obs) {
  auto res = client_->Post("/observations", observation_to_json(obs), "application/json");
  if (!res) throw TransportError("POST /observations: " + httplib::to_string(res.error()));
  return ack_from_json(res->body);
}

std::string HttpClient::get(const std::string& path) {
  auto res = client_->Get(path);
  if (!res) throw TransportError("GET " + path + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("GET " + path + ": status " + std::to_string(res->status) + " " + res->body);
  return res->body;
}

AdaptationSnapshot HttpClient::adaptation() { return snapshot_from_json(get("/adaptations")); }

AdaptationSnapshot HttpClient::adaptation_after(std::size_t processed) {
  return snapshot_from_json(get("/adaptations?processed=" + std::to_string(processed)));
}

std::string HttpClient::health() { return get("/health"); }

}  // namespace saopt
