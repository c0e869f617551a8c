#include "fixtures.hpp"

#include <sstream>

#include "orsnn/io/csv.hpp"
#include "orsnn/io/text.hpp"

namespace orsnn::testing {

std::map<char, BlockLayout> load_block_fixtures(const std::string& path) {
    std::map<char, BlockLayout> out;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, '|')) cells.push_back(trim(cell));
        if (cells.size() != 4 || cells[0].size() != 1) fail(ErrorKind::ParseError, "bad fixture row: " + line);
        out[cells[0][0]] = BlockLayout{cells[1], cells[2], cells[3]};
    }
    return out;
}

BlockLayout or_sew_layout(char placement, AttentionDim dim) {
    BlockSpec spec;
    spec.topology = BlockTopology::OrSew;
    spec.in_channels = 64;
    spec.channels = 128;
    spec.stride = 2;
    spec.steps = 4;
    spec.plan = AttentionPlan{dim, static_cast<Placement>(placement - 'a')};
    std::mt19937_64 rng(0);
    return ResidualBlock<float>("block", spec, rng).layout();
}

}  // namespace orsnn::testing
