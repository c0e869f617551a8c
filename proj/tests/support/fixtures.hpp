#pragma once

#include <map>
#include <string>

#include "orsnn/residual/block.hpp"

namespace orsnn::testing {

/// Reads "placement | main | shortcut | post" rows; '#' starts a comment.
std::map<char, BlockLayout> load_block_fixtures(const std::string& path);

/// The OR-SEW(c128) downsampling block with plan T/<placement>.
BlockLayout or_sew_layout(char placement, AttentionDim dim = AttentionDim::Temporal);

}  // namespace orsnn::testing
