#pragma once

#include "convert.h"

namespace YAML {

double Sum(const Node& sequence);

}  // namespace YAML
