#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>

#include "ivg/geometry.hpp"
#include "ivg/jsonio.hpp"
#include "ivg/policy.hpp"

namespace ivg {

// Remote policy reachable over HTTP, e.g. "http://127.0.0.1:8090".
struct Endpoint {
  std::string url;
  std::chrono::milliseconds timeout{30000};
};

enum class ActionKind { kText, kBox, kStop };

struct PolicyAction {
  ActionKind kind = ActionKind::kText;
  std::string text;
  std::optional<BBox> box;
  std::array<int, 4> bins{};
  bool stop = false;
};

// POST /act request body for an observation.
Json make_act_request(const PolicyObservation& obs);

// Validates a /act response. Throws MalformedResponseError naming the
// offending field.
PolicyAction parse_act_response(const Json& body);

// One request/response exchange with a remote policy. Throws TimeoutError,
// TransportError or MalformedResponseError.
PolicyAction external_policy_call(const Endpoint& endpoint, const PolicyObservation& obs);

// Shared JSON-over-HTTP transport (also used by the remote polisher).
Json post_json(const Endpoint& endpoint, const std::string& path, const Json& body);

class ExternalQuestioner : public QuestionerPolicy {
 public:
  explicit ExternalQuestioner(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string id() const override { return endpoint_.url; }
  std::string ask(const PolicyObservation& obs) const override;

 private:
  Endpoint endpoint_;
};

class ExternalGuesser : public GuesserPolicy {
 public:
  explicit ExternalGuesser(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string id() const override { return endpoint_.url; }
  StopDecision decide_stop(const PolicyObservation& obs) const override;
  GuessResult guess(const PolicyObservation& obs) const override;

 private:
  Endpoint endpoint_;
};

class ExternalOracle : public OraclePolicy {
 public:
  explicit ExternalOracle(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string id() const override { return endpoint_.url; }
  std::string describe(const PolicyObservation& obs) const override;
  std::string answer(const PolicyObservation& obs) const override;

 private:
  Endpoint endpoint_;
};

}  // namespace ivg
