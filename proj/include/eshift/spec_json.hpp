#pragma once

#include <string>

#include "eshift/networks.hpp"

namespace eshift {

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& text);

std::string norm_kind_name(NormKind kind);
NormKind norm_kind_from_name(const std::string& name);
std::string block_kind_name(BlockKind kind);
BlockKind block_kind_from_name(const std::string& name);

}  // namespace eshift
