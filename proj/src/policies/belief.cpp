#include "ivg/belief.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ivg/error.hpp"

namespace ivg {

Belief::Belief(std::map<ObjectId, double> weights) : weights_(std::move(weights)) {
  for (const auto& [id, w] : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ValidationError(fmt::format("belief weight {} for object {} outside [0, 1]", w, id));
    }
  }
}

Belief Belief::uniform(const Scene& scene) {
  std::map<ObjectId, double> w;
  for (const auto& o : scene.objects) w[o.id] = 1.0;
  return Belief(std::move(w));
}

double Belief::weight(ObjectId id) const {
  const auto it = weights_.find(id);
  return it == weights_.end() ? 0.0 : it->second;
}

void Belief::scale(ObjectId id, double factor) {
  auto it = weights_.find(id);
  if (it != weights_.end()) it->second *= factor;
}

double Belief::total() const {
  double s = 0.0;
  for (const auto& [id, w] : weights_) s += w;
  return s;
}

std::map<ObjectId, double> Belief::normalized() const {
  const double t = total();
  if (t <= 0.0) throw DegenerateBeliefError("cannot normalize an all-zero belief");
  std::map<ObjectId, double> out;
  for (const auto& [id, w] : weights_) out[id] = w / t;
  return out;
}

std::vector<ObjectId> Belief::support() const {
  std::vector<ObjectId> ids;
  for (const auto& [id, w] : weights_) {
    if (w > 0.0) ids.push_back(id);
  }
  return ids;
}

ObjectId Belief::argmax() const {
  if (degenerate()) throw DegenerateBeliefError("argmax of an all-zero belief");
  ObjectId best = weights_.begin()->first;
  double best_w = -1.0;
  for (const auto& [id, w] : weights_) {
    if (w > best_w) {
      best = id;
      best_w = w;
    }
  }
  return best;
}

double Belief::entropy_bits() const {
  double h = 0.0;
  for (const auto& [id, p] : normalized()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace ivg
