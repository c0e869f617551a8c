#include "orsnn/metrics/record.hpp"

#include "orsnn/error.hpp"

namespace orsnn {

LayerRecord& SpikeRecord::entry(const std::string& name, LayerRole role) {
    auto it = index_.find(name);
    if (it != index_.end()) return layers[it->second];
    index_.emplace(name, layers.size());
    LayerRecord rec;
    rec.name = name;
    rec.role = role;
    layers.push_back(std::move(rec));
    return layers.back();
}

const LayerRecord* SpikeRecord::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &layers[it->second];
}

const LayerRecord& SpikeRecord::at(const std::string& name) const {
    const auto* rec = find(name);
    if (rec == nullptr) fail(ErrorKind::UnknownLayer, "no record for layer '" + name + "'");
    return *rec;
}

}  // namespace orsnn
