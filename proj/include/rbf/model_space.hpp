#pragma once

#include <cstdint>
#include <vector>

namespace rbf {

// Hard cap on the number of supplemental sources; the model space is 2^H.
inline constexpr int kDefaultMaxSupplements = 20;

// One exchangeability model: which of the H supplemental sources are
// assumed exchangeable with the primary. Bit h of `index` is the
// inclusion indicator of supplement h (little-endian), so index 0 is the
// null model.
struct ModelConfiguration {
  std::uint32_t index = 0;
  int num_supplements = 0;

  bool includes(int h) const { return (index >> h) & 1u; }

  // Number of included supplemental sources.
  int count() const;

  std::vector<int> inclusion() const;

  bool operator==(const ModelConfiguration&) const = default;
};

// All 2^H models in canonical index order. Throws ValidationError for
// H < 1 and CapacityError when H exceeds `max_supplements`.
std::vector<ModelConfiguration> enumerate_models(int num_supplements,
                                                 int max_supplements = kDefaultMaxSupplements);

// Index of the model with the given inclusion vector.
std::uint32_t model_index(const std::vector<int>& inclusion);

} // namespace rbf
