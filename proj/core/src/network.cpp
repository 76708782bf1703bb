// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/network.hpp"

#include <stdexcept>

#include "ppctrl/rng.hpp"

namespace ppctrl {

Eigen::MatrixXd gen_network(int size, double density, double weight_min,
                            double weight_max, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("gen_network: size must be >= 1");
  if (!(density >= 0.0 && density <= 1.0)) {
    throw std::invalid_argument("gen_network: density must be in [0, 1]");
  }
  if (!(0.0 <= weight_min && weight_min <= weight_max)) {
    throw std::invalid_argument("gen_network: bad weight range");
  }
  RngStream rng(derive_seed(seed, "network"));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (i == j) continue;
      if (rng.uniform() < density) {
        a(i, j) = rng.uniform(weight_min, weight_max);
      }
    }
  }
  return a;
}

}  // namespace ppctrl
