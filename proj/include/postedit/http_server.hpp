#pragma once

#include <memory>
#include <string>

#include "postedit/error.hpp"
#include "postedit/workspace.hpp"

namespace postedit::service {

// HTTP status used for a library error code.
int http_status(ErrorCode code);

// JSON API over a Workspace. Translator endpoints expect
// "Authorization: Bearer <token>"; writes to a segment also need the lease
// token in "X-Lease-Token".
class HttpServer {
 public:
  explicit HttpServer(Workspace& workspace);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace postedit::service
