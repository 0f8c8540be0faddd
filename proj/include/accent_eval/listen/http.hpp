#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "accent_eval/error.hpp"
#include "accent_eval/listen/service.hpp"

namespace accent_eval::listen {

struct HttpOptions {
  /// Directory holding `<audio_id>.wav`. When set, POST /tests also checks
  /// that every referenced audio id exists there.
  std::filesystem::path audio_dir;
};

/// JSON-over-HTTP front end for a ListenService.
///
///   POST /tests                          TestDefinition -> {test_id}
///   POST /sessions                       {test_id, listener_id} -> session
///   GET  /sessions/{token}/next          next item or {done, aid_prompt}
///   POST /sessions/{token}/items/{id}    {choice, highlights, elapsed_ms}
///   POST /sessions/{token}/finalize      {aid_answer} -> screening result
///   POST /submissions/{id}/override      {valid, note}
///   GET  /tests/{id}/aggregate?only_valid=true|false
///   GET  /tests/{id}/progress
///   GET  /tests/{id}/submissions
///   GET  /audio/{audio_id}               audio/wav, Range requests honored
///
/// Errors come back as {error, message} with 400 (validation, parse),
/// 404 (not found) or 409 (conflict, state).
class HttpServer {
 public:
  HttpServer(ListenService& service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Blocks until stop() is called. Returns false when binding fails.
  bool listen(const std::string& host, int port);

  /// Binds to an ephemeral port and returns it (or -1 on failure); follow
  /// with listen_after_bind() on a worker thread.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();

  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(Errc code);

}  // namespace accent_eval::listen
