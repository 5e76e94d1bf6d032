#pragma once

#include <cstdlib>
#include <string>

#include "httplib.h"

#include "activerank/service/session.hpp"

namespace activerank::service {

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

inline void send_error(httplib::Response& res, int status, const std::string& code,
                       const std::string& message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "bad_request", std::string("body is not valid JSON: ") + e.what());
  }
}

// Runs `fn`, mapping library exceptions onto {code, message} responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.code(), e.what());
  } catch (const ConfigError& e) {
    send_error(res, 422, "invalid", e.what());
  } catch (const StateError& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const OracleError& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace detail

// Registers the session API on `server`:
//   POST   /sessions                  {items, boundaries, delta?, alpha?, seed?}
//   GET    /sessions/{id}/next
//   POST   /sessions/{id}/answer      {query_id, winner: "left" | "right"}
//   GET    /sessions/{id}/state
//   DELETE /sessions/{id}
inline void register_routes(httplib::Server& server, SessionStore& store) {
  using httplib::Request;
  using httplib::Response;
  using detail::guarded;
  using detail::send_json;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Post("/sessions", [&](const Request& req, Response& res) {
    guarded(res, [&] {
      auto s = store.create(detail::parse_body(req));
      json body = *s->state();
      send_json(res, 201, body);
    });
  });
  server.Get(R"(/sessions/([^/]+)/next)", [&](const Request& req, Response& res) {
    guarded(res, [&] { send_json(res, 200, store.get(req.matches[1])->next()); });
  });
  server.Post(R"(/sessions/([^/]+)/answer)", [&](const Request& req, Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      const json body = detail::parse_body(req);
      if (!body.is_object() || !body.contains("query_id") || !body["query_id"].is_number_unsigned())
        throw invalid("body needs a non-negative integer \"query_id\"");
      if (!body.contains("winner") || !body["winner"].is_string())
        throw invalid("winner must be \"left\" or \"right\"");
      send_json(res, 200, s->answer(body["query_id"].get<std::uint64_t>(), body["winner"].get<std::string>()));
    });
  });
  server.Get(R"(/sessions/([^/]+)/state)", [&](const Request& req, Response& res) {
    guarded(res, [&] { send_json(res, 200, *store.get(req.matches[1])->state()); });
  });
  server.Delete(R"(/sessions/([^/]+))", [&](const Request& req, Response& res) {
    guarded(res, [&] {
      store.remove(req.matches[1]);
      send_json(res, 200, json{{"deleted", true}});
    });
  });
  server.set_error_handler([](const Request&, Response& res) {
    if (res.body.empty()) detail::send_error(res, res.status, "not_found", "no such route");
  });
}

struct ServeOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::optional<std::filesystem::path> data_dir;

  // PORT and DATA_DIR from the environment; DATA_DIR unset keeps sessions in
  // memory only.
  static ServeOptions from_env() {
    ServeOptions o;
    if (const char* p = std::getenv("PORT"); p && *p) o.port = std::stoi(p);
    if (const char* d = std::getenv("DATA_DIR"); d && *d) o.data_dir = d;
    return o;
  }
};

}  // namespace activerank::service
