#include "orsnn/tensor/shape.hpp"

#include <sstream>

#include "orsnn/error.hpp"

namespace orsnn {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            fail(ErrorKind::ShapeMismatch,
                 "cannot broadcast " + to_string(a) + " with " + to_string(b));
        }
        out[i] = da == 1 ? db : da;
    }
    return out;
}

std::vector<std::size_t> broadcast_strides(const Shape& shape, const Shape& target) {
    const std::size_t rank = target.size();
    std::vector<std::size_t> strides(rank, 0);
    std::size_t stride = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        const std::size_t axis = rank - shape.size() + i;
        strides[axis] = (shape[i] == 1 && target[axis] != 1) ? 0 : stride;
        stride *= shape[i];
    }
    return strides;
}

}  // namespace orsnn
