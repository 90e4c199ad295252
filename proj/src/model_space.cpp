#include "rbf/model_space.hpp"

#include <bit>
#include <string>

#include "rbf/errors.hpp"

namespace rbf {

int ModelConfiguration::count() const { return std::popcount(index); }

std::vector<int> ModelConfiguration::inclusion() const {
  std::vector<int> bits(num_supplements);
  for (int h = 0; h < num_supplements; ++h) bits[h] = includes(h) ? 1 : 0;
  return bits;
}

std::vector<ModelConfiguration> enumerate_models(int num_supplements, int max_supplements) {
  if (num_supplements < 1) {
    throw ValidationError("enumerate_models: need at least 1 supplemental source");
  }
  if (num_supplements > max_supplements) {
    throw CapacityError("enumerate_models: " + std::to_string(num_supplements) +
                        " supplemental sources exceeds the limit of " +
                        std::to_string(max_supplements) + " (model space is 2^H)");
  }
  const std::uint32_t count = 1u << num_supplements;
  std::vector<ModelConfiguration> models;
  models.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    models.push_back(ModelConfiguration{k, num_supplements});
  }
  return models;
}

std::uint32_t model_index(const std::vector<int>& inclusion) {
  std::uint32_t index = 0;
  for (std::size_t h = 0; h < inclusion.size(); ++h) {
    if (inclusion[h]) index |= 1u << h;
  }
  return index;
}

} // namespace rbf
