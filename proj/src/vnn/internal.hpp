#pragma once

#include "ibw/vnn.hpp"

namespace ibw::vnn {

Tensor weight_variance(const VariationalDense& layer);

}  // namespace ibw::vnn
