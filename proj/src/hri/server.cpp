#include "ivg/hri_server.hpp"

#include <charconv>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "ivg/error.hpp"
#include "ivg/render.hpp"

namespace ivg::hri {

std::vector<BBox> parse_box_list(std::string_view text) {
  std::vector<BBox> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view part = text.substr(start, end - start);
    std::array<double, 4> v{};
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
      const auto comma = k < 3 ? part.find(',', pos) : part.size();
      if (comma == std::string_view::npos) throw MalformedBoxError(fmt::format("box '{}' needs 4 numbers", part));
      const std::string token(part.substr(pos, comma - pos));
      try {
        std::size_t used = 0;
        v[static_cast<std::size_t>(k)] = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw MalformedBoxError(fmt::format("box '{}' has a bad number '{}'", part, token));
      }
      pos = comma + 1;
    }
    out.emplace_back(v[0], v[1], v[2], v[3]);
    start = end + 1;
  }
  return out;
}

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  send_json(res, {{"version", kWireVersion}, {"error", {{"kind", kind}, {"message", message}}}}, status);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, "validation", e.what());
  } catch (const ConflictError& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const StateError& e) {
    send_error(res, 409, "state", e.what());
  } catch (const PolicyError& e) {
    send_error(res, 502, to_string(e.kind()), "policy call failed");
  } catch (const Json::exception& e) {
    send_error(res, 400, "validation", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::exception&) {
    throw ValidationError("request body is not JSON");
  }
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

struct HriServer::Impl {
  std::shared_ptr<HriService> service;
  httplib::Server http;
  std::thread thread;
  bool bound = false;
};

HriServer::HriServer(std::shared_ptr<HriService> service, std::string static_dir) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& http = impl_->http;
  auto* svc = impl_->service.get();

  http.Post("/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      if (!body.contains("item_id")) throw ValidationError("missing field 'item_id'");
      if (!body.contains("bindings")) throw ValidationError("missing field 'bindings'");
      const auto bindings = body["bindings"].get<std::vector<std::string>>();
      const auto seed = body.value("seed", std::uint64_t{0});
      send_json(res, svc->create_session(body["item_id"].get<std::string>(), bindings, seed), 201);
    });
  });

  http.Get(R"(/sessions/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, svc->session_view(req.matches[1])); });
  });

  http.Post(R"(/sessions/([^/]+)/slots/([^/]+)/answer)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      if (!body.contains("text") || !body["text"].is_string()) throw ValidationError("missing string field 'text'");
      send_json(res, svc->post_answer(req.matches[1], req.matches[2], body["text"].get<std::string>()));
    });
  });

  http.Post(R"(/sessions/([^/]+)/scores)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      if (!body.contains("verdicts") || !body["verdicts"].is_object()) {
        throw ValidationError("missing object field 'verdicts'");
      }
      std::map<std::string, Verdict> verdicts;
      for (const auto& [label, v] : body["verdicts"].items()) {
        const auto parsed = parse_verdict(v.is_null() ? std::string() : v.get<std::string>());
        if (!parsed) throw ValidationError(fmt::format("unknown verdict for slot {}", label));
        verdicts[label] = *parsed;
      }
      svc->submit_scores(req.matches[1], verdicts, body.value("comment", std::string()));
      send_json(res, svc->session_view(req.matches[1]));
    });
  });

  http.Get("/aggregate", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto bindings = req.has_param("bindings") ? split_commas(req.get_param_value("bindings"))
                                                      : std::vector<std::string>{};
      send_json(res, to_json_value(svc->aggregate(bindings)));
    });
  });

  http.Get("/items", [svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json items = Json::array();
      for (const BenchEntry& e : svc->items()) {
        items.push_back({{"item_id", e.item_id},
                         {"scene_id", e.scene.scene_id},
                         {"instruction", e.instruction},
                         {"target", e.target},
                         {"target_box", e.scene.at(e.target).bbox}});
      }
      send_json(res, {{"version", kWireVersion}, {"items", std::move(items)}});
    });
  });

  http.Get(R"(/items/([^/]+)/render)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const BenchEntry& e = svc->item(req.matches[1]);
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "png";
      std::vector<Overlay> overlays;
      if (req.has_param("boxes")) {
        for (const BBox& b : parse_box_list(req.get_param_value("boxes"))) overlays.push_back({b, "guess"});
      }
      if (req.has_param("target") && req.get_param_value("target") == "1") {
        overlays.push_back({e.scene.at(e.target).bbox, "target"});
      }
      const std::string bytes = render_scene(e.scene, format, overlays);
      res.set_header("X-IVG-Version", std::string(kWireVersion));
      res.set_content(bytes, format == "svg" ? "image/svg+xml" : "image/png");
    });
  });

  if (!static_dir.empty() && !http.set_mount_point("/", static_dir)) {
    throw NotFoundError(fmt::format("static directory {} not found", static_dir));
  }
}

HriServer::~HriServer() { stop(); }

int HriServer::bind(const std::string& host, int port) {
  int bound = 0;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else {
    bound = impl_->http.bind_to_port(host, port) ? port : -1;
  }
  if (bound < 0) throw StateError(fmt::format("cannot bind {}:{}", host, port));
  impl_->bound = true;
  return bound;
}

void HriServer::listen() {
  if (!impl_->bound) throw StateError("bind() must come before listen()");
  impl_->http.listen_after_bind();
}

void HriServer::start() {
  if (!impl_->bound) throw StateError("bind() must come before start()");
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

void HriServer::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ivg::hri
