#pragma once

#include <memory>
#include <string>

#include "ivg/hri.hpp"

namespace ivg::hri {

// JSON API over an HriService:
//   POST /sessions                          {item_id, bindings, seed}
//   GET  /sessions/{id}
//   POST /sessions/{id}/slots/{A|B|C}/answer {text}
//   POST /sessions/{id}/scores              {verdicts: {A: "best", ...}, comment}
//   GET  /aggregate?bindings=x,y
//   GET  /items
//   GET  /items/{id}/render?format=png|svg&boxes=x0,y0,x1,y1;...
// Errors come back as {version, error: {kind, message}} with 400 for
// validation, 404 for unknown ids, 409 for conflicts and state errors and
// 502 for policy failures. A non-empty static_dir is served under "/".
class HriServer {
 public:
  explicit HriServer(std::shared_ptr<HriService> service, std::string static_dir = {});
  ~HriServer();
  HriServer(const HriServer&) = delete;
  HriServer& operator=(const HriServer&) = delete;

  // Binds without serving yet. Port 0 picks a free port; returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(). Requires bind().
  void listen();
  // bind() has to come first; serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Parses "x0,y0,x1,y1;x0,y0,x1,y1". Throws MalformedBoxError.
std::vector<BBox> parse_box_list(std::string_view text);

}  // namespace ivg::hri
