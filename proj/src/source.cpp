#include "mdiotbc/source.hpp"

#include <cmath>
#include <stdexcept>

namespace mdiotbc {

SourceModel SourceModel::coherent(std::vector<IntensityLevel> levels) {
    SourceModel s;
    s.kind = Kind::Coherent;
    s.levels = std::move(levels);
    s.validate();
    return s;
}

void SourceModel::validate() const {
    if (levels.empty()) throw std::invalid_argument("source needs at least one intensity level");
    if (is_perfect()) {
        if (levels.size() != 1) throw std::invalid_argument("perfect source has exactly one level");
        return;
    }
    double total = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& a = levels[i];
        if (!(a.mean > 0)) throw std::invalid_argument("intensity '" + a.label + "' must be positive");
        if (!(a.prob >= 0 && a.prob <= 1)) throw std::invalid_argument("choice probability out of range");
        total += a.prob;
        for (std::size_t j = 0; j < i; ++j) {
            if (levels[j].mean == a.mean) throw std::invalid_argument("intensities must be distinct");
            if (levels[j].label == a.label) throw std::invalid_argument("duplicate intensity label " + a.label);
        }
    }
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("choice probabilities must sum to 1");
}

std::size_t SourceModel::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i].label == label) return i;
    throw std::invalid_argument("unknown intensity label '" + label + "'");
}

}  // namespace mdiotbc
