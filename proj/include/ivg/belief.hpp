#pragma once

#include <map>
#include <vector>

#include "ivg/scene.hpp"

namespace ivg {

// Per-object consistency weights kept by the reference Guesser. Weights are
// stored unnormalized in [0, 1]; likelihood updates only ever shrink them.
class Belief {
 public:
  Belief() = default;
  // Throws ValidationError for negative weights or weights above 1.
  explicit Belief(std::map<ObjectId, double> weights);

  static Belief uniform(const Scene& scene);

  const std::map<ObjectId, double>& weights() const { return weights_; }
  double weight(ObjectId id) const;
  void scale(ObjectId id, double factor);

  double total() const;
  bool degenerate() const { return total() <= 0.0; }
  std::map<ObjectId, double> normalized() const;
  // Ids with positive weight, ascending.
  std::vector<ObjectId> support() const;
  // Lowest id among the maximal weights. Throws DegenerateBeliefError.
  ObjectId argmax() const;
  double entropy_bits() const;

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::map<ObjectId, double> weights_;
};

}  // namespace ivg
