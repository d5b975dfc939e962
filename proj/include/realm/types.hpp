#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace realm {

struct LabeledSample {
  std::vector<double> x;
  std::size_t label = 0;
};

using LabeledSamples = std::vector<LabeledSample>;

/// Ordered, unlabeled inputs as seen by the adaptation engine. `labels` is
/// either empty or parallel to `inputs` and is only used for offline scoring.
struct Stream {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
  std::uint64_t shuffle_seed = 0;

  [[nodiscard]] std::size_t size() const { return inputs.size(); }
  [[nodiscard]] bool has_labels() const { return !labels.empty(); }
};

}  // namespace realm
