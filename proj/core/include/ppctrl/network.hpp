// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace ppctrl {

// Random sparse influence matrix: each off-diagonal entry is nonzero with
// probability `density`, drawn uniformly from [weight_min, weight_max];
// the diagonal is zero. Entries are visited row-major, so the result is a
// pure function of the arguments.
Eigen::MatrixXd gen_network(int size, double density, double weight_min,
                            double weight_max, std::uint64_t seed);

}  // namespace ppctrl
