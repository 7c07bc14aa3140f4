// Copyright 2026, The cdscal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Human-in-the-loop label service.
//
// The pipeline thread posts a query batch into a session and blocks; the
// annotation console polls the batch over HTTP and submits labels, possibly
// in several parts. Once every pending id is labelled the pipeline resumes.
//
//   POST /sessions                  -> {"session": id, "state": "idle"}
//   GET  /sessions                  -> {"sessions": [id, ...]}
//   GET  /sessions/{id}/queries     -> pending batch, or {"state": "idle", "items": []}
//   POST /sessions/{id}/labels      <- {"labels": {"<sample id>": "<class>", ...}}
//   GET  /sessions/{id}/status
//
// Errors are {"code", "message", "detail"} with a matching HTTP status.

#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

// Eigen first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "cdscal/projection.hpp"

#include <httplib.h>
#include <json.hpp>

#include "cdscal/active.hpp"

namespace cdscal::service {

using json = nlohmann::json;

class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message, json detail = json::object())
      : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const json& detail() const noexcept { return detail_; }
  json body() const { return json{{"code", code_}, {"message", what()}, {"detail", detail_}}; }

 private:
  int status_;
  std::string code_;
  json detail_;
};

enum class QueryKind { representative, informative };

inline const char* to_string(QueryKind k) { return k == QueryKind::representative ? "representative" : "informative"; }

struct QueryItem {
  SampleId id = 0;
  Features features;
  Point2 projection{};
  QueryKind kind = QueryKind::representative;
  std::size_t cluster = 0;  // chunk cluster index, as context for the annotator
};

struct PendingQuery {
  std::string session;
  int t = 0;
  std::vector<QueryItem> items;
  std::vector<ClassLabel> known_classes;
};

inline void to_json(json& j, const QueryItem& q) {
  j = json{{"id", q.id}, {"features", q.features}, {"projection", {q.projection[0], q.projection[1]}},
           {"kind", to_string(q.kind)}, {"cluster", q.cluster}};
}

inline void to_json(json& j, const PendingQuery& p) {
  j = json{{"session", p.session}, {"state", "pending"}, {"t", p.t}, {"items", p.items}, {"known_classes", p.known_classes}};
}

struct LabelAck {
  std::size_t accepted = 0;
  std::size_t remaining = 0;
  bool complete = false;
};

/// Session state shared between the pipeline thread and the HTTP handlers.
/// Every session moves idle -> pending -> idle; other transitions are rejected.
class SessionStore {
 public:
  std::string open_session(json manifest = json::object()) {
    std::lock_guard lock(mu_);
    const std::string id = "s" + std::to_string(++counter_);
    sessions_[id].manifest = std::move(manifest);
    return id;
  }

  std::vector<std::string> list() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
  }

  void post_queries(const std::string& id, PendingQuery batch) {
    std::lock_guard lock(mu_);
    Session& s = get(id);
    if (s.pending) throw ServiceError(409, "conflict", "session " + id + " already has a pending batch");
    if (batch.items.empty()) throw ServiceError(400, "bad_request", "query batch must not be empty");
    batch.session = id;
    batch.known_classes.assign(s.known.begin(), s.known.end());
    s.pending = std::move(batch);
    s.received.clear();
    s.completed.reset();
  }

  std::optional<PendingQuery> get_queries(const std::string& id) const {
    std::lock_guard lock(mu_);
    return get(id).pending;
  }

  /// Accepts a partial or complete submission. Rejected submissions leave the session unchanged.
  LabelAck post_labels(const std::string& id, const std::map<SampleId, ClassLabel>& labels) {
    std::unique_lock lock(mu_);
    Session& s = get(id);
    if (!s.pending) throw ServiceError(409, "conflict", "session " + id + " has no pending batch");
    std::set<SampleId> pending_ids;
    for (const auto& item : s.pending->items) pending_ids.insert(item.id);
    json unknown = json::array(), empty = json::array();
    for (const auto& [sid, label] : labels) {
      if (!pending_ids.count(sid)) unknown.push_back(sid);
      if (label.empty()) empty.push_back(sid);
    }
    if (!unknown.empty())
      throw ServiceError(400, "unknown_ids", "submission contains ids that are not pending", json{{"ids", unknown}});
    if (!empty.empty())
      throw ServiceError(400, "empty_label", "class identifiers must be non-empty", json{{"ids", empty}});

    for (const auto& [sid, label] : labels) s.received[sid] = label;
    LabelAck ack;
    ack.accepted = labels.size();
    ack.remaining = pending_ids.size() - s.received.size();
    if (ack.remaining == 0) {
      LabeledBatch done;
      done.labels = std::move(s.received);
      for (const auto& [sid, label] : done.labels) s.known.insert(label);
      s.received.clear();
      s.completed = std::move(done);
      s.pending.reset();
      ++s.batches_completed;
      ack.complete = true;
      cv_.notify_all();
    }
    return ack;
  }

  /// Blocks until the pending batch is fully labelled. On timeout the batch is withdrawn.
  std::optional<LabeledBatch> wait_labels(const std::string& id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    get(id);
    const bool ready = cv_.wait_for(lock, timeout, [&] { return get(id).completed.has_value(); });
    Session& s = get(id);
    if (!ready) {
      s.pending.reset();
      s.received.clear();
      return std::nullopt;
    }
    auto out = std::move(s.completed);
    s.completed.reset();
    return out;
  }

  json status(const std::string& id) const {
    std::lock_guard lock(mu_);
    const Session& s = get(id);
    json j{{"session", id},
           {"state", s.pending ? "pending" : "idle"},
           {"batches_completed", s.batches_completed},
           {"known_classes", std::vector<ClassLabel>(s.known.begin(), s.known.end())},
           {"manifest", s.manifest}};
    if (s.pending) {
      j["t"] = s.pending->t;
      j["pending"] = s.pending->items.size();
      j["labeled"] = s.received.size();
    }
    return j;
  }

 private:
  struct Session {
    json manifest;
    std::optional<PendingQuery> pending;
    std::map<SampleId, ClassLabel> received;
    std::optional<LabeledBatch> completed;
    std::set<ClassLabel> known;
    std::size_t batches_completed = 0;
  };

  Session& get(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "unknown session " + id);
    return it->second;
  }
  const Session& get(const std::string& id) const { return const_cast<SessionStore*>(this)->get(id); }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Session> sessions_;
  std::size_t counter_ = 0;
};

/// Parses {"labels": {"12": "A"}} or {"labels": [{"id": 12, "label": "A"}]}.
inline std::map<SampleId, ClassLabel> parse_label_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "bad_request", "invalid JSON body", json{{"byte", e.byte}});
  }
  if (!j.is_object() || !j.contains("labels"))
    throw ServiceError(400, "bad_request", "body must be an object with a \"labels\" field");
  std::map<SampleId, ClassLabel> out;
  const auto& labels = j.at("labels");
  const auto add = [&](const json& id, const json& label) {
    SampleId sid = 0;
    if (id.is_number_unsigned()) {
      sid = id.get<SampleId>();
    } else if (id.is_string()) {
      const std::string s = id.get<std::string>();
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ServiceError(400, "bad_request", "sample id \"" + s + "\" is not a non-negative integer");
      sid = std::stoull(s);
    } else {
      throw ServiceError(400, "bad_request", "sample ids must be non-negative integers");
    }
    if (!label.is_string()) throw ServiceError(400, "bad_request", "class identifiers must be strings");
    out[sid] = label.get<std::string>();
  };
  if (labels.is_object()) {
    for (auto it = labels.begin(); it != labels.end(); ++it) add(json(it.key()), it.value());
  } else if (labels.is_array()) {
    for (const auto& e : labels) {
      if (!e.is_object() || !e.contains("id") || !e.contains("label"))
        throw ServiceError(400, "bad_request", "label entries must be {\"id\", \"label\"} objects");
      add(e.at("id"), e.at("label"));
    }
  } else {
    throw ServiceError(400, "bad_request", "\"labels\" must be an object or an array");
  }
  return out;
}

/// Registers the label-service endpoints on an httplib server.
inline void mount_routes(httplib::Server& server, SessionStore& store) {
  const auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  const auto guarded = [reply](auto handler) {
    return [reply, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ServiceError& e) {
        reply(res, e.status(), e.body());
      } catch (const std::exception& e) {
        reply(res, 500, json{{"code", "internal"}, {"message", e.what()}, {"detail", json::object()}});
      }
    };
  };

  server.Post("/sessions", guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
    json manifest = json::object();
    if (!req.body.empty()) {
      try {
        manifest = json::parse(req.body);
      } catch (const json::parse_error& e) {
        throw ServiceError(400, "bad_request", "invalid JSON body", json{{"byte", e.byte}});
      }
    }
    reply(res, 201, json{{"session", store.open_session(std::move(manifest))}, {"state", "idle"}});
  }));
  server.Get("/sessions", guarded([&store, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"sessions", store.list()}});
  }));
  server.Get(R"(/sessions/([^/]+)/queries)", guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto pending = store.get_queries(id);
    if (pending)
      reply(res, 200, json(*pending));
    else
      reply(res, 200, json{{"session", id}, {"state", "idle"}, {"items", json::array()}});
  }));
  server.Post(R"(/sessions/([^/]+)/labels)", guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
    const auto ack = store.post_labels(req.matches[1], parse_label_body(req.body));
    reply(res, 200, json{{"accepted", ack.accepted}, {"remaining", ack.remaining}, {"complete", ack.complete}});
  }));
  server.Get(R"(/sessions/([^/]+)/status)", guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, store.status(req.matches[1]));
  }));
}

/// Runs the HTTP listener on a background thread for the lifetime of the object.
class LabelServer {
 public:
  LabelServer(SessionStore& store, const std::string& host, int port) {
    mount_routes(server_, store);
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("label service: cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LabelServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  int port() const noexcept { return port_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

/// Oracle that hands each query batch to a human through a session.
class RemoteOracle : public Oracle {
 public:
  RemoteOracle(SessionStore& store, std::string session, std::chrono::milliseconds timeout,
               std::function<void(const PendingQuery&)> on_post = {})
      : store_(store), session_(std::move(session)), timeout_(timeout), on_post_(std::move(on_post)) {}

  LabeledBatch label(const QueryRequest& request) override {
    PendingQuery pq;
    pq.t = request.t;
    const auto ids = request.batch.all();
    const auto coords = project_2d(request.chunk, ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      QueryItem item;
      item.id = ids[i];
      item.features = request.chunk.features(ids[i]);
      item.projection = coords[i];
      item.kind = i < request.batch.representative.size() ? QueryKind::representative : QueryKind::informative;
      item.cluster = request.assignments[ids[i]];
      pq.items.push_back(std::move(item));
    }
    try {
      store_.post_queries(session_, std::move(pq));
    } catch (const ServiceError& e) {
      throw QueryAborted(std::string("label service: ") + e.what(), request.batch);
    }
    if (on_post_) {
      if (auto posted = store_.get_queries(session_)) on_post_(*posted);
    }
    auto labels = store_.wait_labels(session_, timeout_);
    if (!labels)
      throw QueryAborted("label service: no labels for chunk " + std::to_string(request.t) + " within " +
                             std::to_string(timeout_.count()) + " ms",
                         request.batch, true);
    return std::move(*labels);
  }

 private:
  SessionStore& store_;
  std::string session_;
  std::chrono::milliseconds timeout_;
  std::function<void(const PendingQuery&)> on_post_;
};

}  // namespace cdscal::service
