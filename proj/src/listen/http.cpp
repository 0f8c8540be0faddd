#include "accent_eval/listen/http.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace accent_eval::listen {

using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::parse:
    case Errc::validation:
    case Errc::precondition:
    case Errc::config:
      return 400;
    case Errc::not_found:
      return 404;
    case Errc::conflict:
    case Errc::state:
      return 409;
    default:
      return 500;
  }
}

namespace {

bool safe_audio_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  for (unsigned char c : id) {
    if (!(std::isalnum(c) || c == '-' || c == '_' || c == '.')) return false;
  }
  return true;
}

json parse_body(const httplib::Request& req) {
  try {
    return req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename T>
T body_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::validation, std::string("missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::validation, std::string("'") + key + "' has the wrong type");
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler and converts toolkit errors into JSON error responses.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, {{"error", code_name(e.code())}, {"message", e.what()}}, http_status(e.code()));
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, {{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  ListenService& service;
  HttpOptions options;
  httplib::Server server;

  Impl(ListenService& s, HttpOptions o) : service(s), options(std::move(o)) { routes(); }

  void check_audio(const TestDefinition& t) const {
    if (options.audio_dir.empty()) return;
    auto check = [&](const XabItem& i) {
      for (const auto* id : {&i.reference_audio_id, &i.candidate_a_audio_id, &i.candidate_b_audio_id}) {
        if (!safe_audio_id(*id) || !std::filesystem::exists(options.audio_dir / (*id + ".wav"))) {
          throw Error(Errc::validation, "item '" + i.item_id + "' references unknown audio '" + *id + "'");
        }
      }
    };
    for (const auto& i : t.items) check(i);
    for (const auto& a : t.attention_items) check(a.item);
  }

  void routes() {
    server.Post("/tests", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const TestDefinition t = test_from_json(parse_body(req));
      check_audio(t);
      service.create_test(t);
      send_json(res, {{"test_id", t.test_id}}, 201);
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const SessionInfo info =
          service.create_session(body_field<std::string>(body, "test_id"), body_field<std::string>(body, "listener_id"));
      send_json(res, to_json(info), 201);
    }));

    server.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, to_json(service.next(req.matches[1])));
    }));

    server.Post(R"(/sessions/([^/]+)/items/([^/]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  ItemSubmission s;
                  s.item_id = req.matches[2];
                  s.screen_choice = parse_choice(body_field<std::string>(body, "choice"));
                  s.elapsed_ms = body.contains("elapsed_ms") ? body_field<std::int64_t>(body, "elapsed_ms") : 0;
                  if (body.contains("highlights")) {
                    for (const auto& span : body_field<json>(body, "highlights")) {
                      s.highlights.push_back(
                          {body_field<std::size_t>(span, "char_start"), body_field<std::size_t>(span, "char_end")});
                    }
                  }
                  const ItemAnswer a = service.submit_item(req.matches[1], s);
                  json out = {{"accepted", true}, {"item_id", a.item_id}};
                  json spans = json::array();
                  for (const auto& h : a.highlights) spans.push_back({{"char_start", h.char_start}, {"char_end", h.char_end}});
                  out["highlights"] = spans;
                  send_json(res, out);
                }));

    server.Post(R"(/sessions/([^/]+)/finalize)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      send_json(res, to_json(service.finalize(req.matches[1], body_field<std::string>(body, "aid_answer"))));
    }));

    server.Post(R"(/submissions/([^/]+)/override)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const std::string note = body.contains("note") ? body_field<std::string>(body, "note") : "";
                  service.override_screening(req.matches[1], body_field<bool>(body, "valid"), note);
                  send_json(res, to_json(service.submission(req.matches[1])));
                }));

    server.Get(R"(/tests/([^/]+)/aggregate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      bool only_valid = true;
      if (req.has_param("only_valid")) {
        const std::string v = req.get_param_value("only_valid");
        if (v == "true" || v == "1") {
          only_valid = true;
        } else if (v == "false" || v == "0") {
          only_valid = false;
        } else {
          throw Error(Errc::validation, "only_valid must be true or false");
        }
      }
      send_json(res, to_json(service.aggregate(req.matches[1], only_valid)));
    }));

    server.Get(R"(/tests/([^/]+)/progress)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, to_json(service.progress(req.matches[1])));
    }));

    server.Get(R"(/tests/([^/]+)/submissions)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : service.submissions(req.matches[1])) out.push_back(to_json(s));
      send_json(res, out);
    }));

    server.Get(R"(/audio/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (options.audio_dir.empty() || !safe_audio_id(id)) throw Error(Errc::not_found, "unknown audio '" + id + "'");
      const auto path = options.audio_dir / (id + ".wav");
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(Errc::not_found, "unknown audio '" + id + "'");
      std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      res.set_header("Accept-Ranges", "bytes");
      res.set_content(std::move(data), "audio/wav");
    }));
  }
};

HttpServer::HttpServer(ListenService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace accent_eval::listen
