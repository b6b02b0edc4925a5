#include "ivg/external_policy.hpp"

#include <chrono>

#include <fmt/format.h>
#include <httplib.h>

#include "ivg/error.hpp"
#include "ivg/scene.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host:port
  std::string base;    // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw TransportError("endpoint url lacks a scheme: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string base = url.substr(path);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {url.substr(0, path), base};
}

const char* kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::kText: return "text";
    case ActionKind::kBox: return "box";
    case ActionKind::kStop: return "stop";
  }
  return "text";
}

PolicyAction expect(PolicyAction action, ActionKind kind, const Endpoint& endpoint) {
  if (action.kind != kind) {
    throw MalformedResponseError(fmt::format("{}: field 'kind' is '{}', expected '{}'",
                                             endpoint.url, kind_name(action.kind),
                                             kind_name(kind)));
  }
  return action;
}

}  // namespace

Json make_act_request(const PolicyObservation& obs) {
  Json history = Json::array();
  for (const auto& t : obs.history) {
    history.push_back(Json{{"speaker", to_string(t.speaker)}, {"text", t.text}});
  }
  Json scene = obs.scene;
  if (obs.role == Role::kOracle && obs.target) scene["target_id"] = *obs.target;

  Json j = Json::object();
  j["version"] = kWireVersion;
  j["role"] = to_string(obs.role);
  j["prompt"] = obs.prompt;
  j["history"] = std::move(history);
  j["scene"] = std::move(scene);
  j["turn_index"] = obs.history.size();
  return j;
}

PolicyAction parse_act_response(const Json& body) {
  if (!body.is_object()) throw MalformedResponseError("response is not a JSON object");
  if (body.contains("version") && body["version"] != kWireVersion) {
    throw MalformedResponseError(
        fmt::format("field 'version' is {}, expected \"{}\"", body["version"].dump(), kWireVersion));
  }
  if (!body.contains("kind")) throw MalformedResponseError("missing required field 'kind'");
  if (!body["kind"].is_string()) throw MalformedResponseError("field 'kind' must be a string");
  const std::string kind = body["kind"].get<std::string>();

  PolicyAction action;
  if (kind == "text") {
    action.kind = ActionKind::kText;
    if (!body.contains("text")) throw MalformedResponseError("missing required field 'text'");
    if (!body["text"].is_string()) throw MalformedResponseError("field 'text' must be a string");
    action.text = body["text"].get<std::string>();
  } else if (kind == "box") {
    action.kind = ActionKind::kBox;
    if (!body.contains("box_bins")) throw MalformedResponseError("missing required field 'box_bins'");
    const Json& bins = body["box_bins"];
    if (!bins.is_array() || bins.size() != 4 ||
        !std::all_of(bins.begin(), bins.end(), [](const Json& b) { return b.is_number_integer(); })) {
      throw MalformedResponseError("field 'box_bins' must be an array of 4 integers");
    }
    for (int i = 0; i < 4; ++i) action.bins[i] = bins[i].get<int>();
    try {
      action.box = box_from_bins(action.bins);
    } catch (const MalformedBoxError& e) {
      throw MalformedResponseError(fmt::format("field 'box_bins': {}", e.what()));
    }
  } else if (kind == "stop") {
    action.kind = ActionKind::kStop;
    if (!body.contains("stop")) throw MalformedResponseError("missing required field 'stop'");
    if (!body["stop"].is_boolean()) throw MalformedResponseError("field 'stop' must be a boolean");
    action.stop = body["stop"].get<bool>();
  } else {
    throw MalformedResponseError(fmt::format("field 'kind' has unknown value '{}'", kind));
  }
  return action;
}

Json post_json(const Endpoint& endpoint, const std::string& path, const Json& body) {
  const SplitUrl url = split_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(url.base + path, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= endpoint.timeout)) {
      throw TimeoutError(fmt::format("{}{}: no response within {} ms", endpoint.url, path,
                                     endpoint.timeout.count()));
    }
    throw TransportError(fmt::format("{}{}: {}", endpoint.url, path, httplib::to_string(err)));
  }
  if (res->status != 200) {
    throw TransportError(fmt::format("{}{}: HTTP {}", endpoint.url, path, res->status));
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw MalformedResponseError(fmt::format("{}{}: body is not JSON: {}", endpoint.url, path, e.what()));
  }
}

PolicyAction external_policy_call(const Endpoint& endpoint, const PolicyObservation& obs) {
  return parse_act_response(post_json(endpoint, "/act", make_act_request(obs)));
}

std::string ExternalQuestioner::ask(const PolicyObservation& obs) const {
  return expect(external_policy_call(endpoint_, obs), ActionKind::kText, endpoint_).text;
}

StopDecision ExternalGuesser::decide_stop(const PolicyObservation& obs) const {
  const PolicyAction a = expect(external_policy_call(endpoint_, obs), ActionKind::kStop, endpoint_);
  if (!a.stop) return {false, std::nullopt};
  return {true, StopReason::kExternal};
}

GuessResult ExternalGuesser::guess(const PolicyObservation& obs) const {
  const PolicyAction a = expect(external_policy_call(endpoint_, obs), ActionKind::kBox, endpoint_);
  return {*a.box, std::nullopt};
}

std::string ExternalOracle::describe(const PolicyObservation& obs) const {
  return expect(external_policy_call(endpoint_, obs), ActionKind::kText, endpoint_).text;
}

std::string ExternalOracle::answer(const PolicyObservation& obs) const {
  return expect(external_policy_call(endpoint_, obs), ActionKind::kText, endpoint_).text;
}

}  // namespace ivg
