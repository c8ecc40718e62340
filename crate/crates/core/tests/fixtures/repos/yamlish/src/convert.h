#pragma once

#include <string>

#include "node.h"

namespace YAML {

bool IsNumeric(const std::string& text);
double ToDouble(const Node& node, double fallback);
std::string Tag(const Node& node);

}  // namespace YAML
