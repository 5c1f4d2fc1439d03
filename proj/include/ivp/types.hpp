#pragma once

#include <cstddef>
#include <vector>

namespace ivp {

using ClassIndex = std::size_t;

struct LabeledExample {
  std::vector<double> features;
  ClassIndex label = 0;
};

}  // namespace ivp
