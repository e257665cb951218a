#include "lungprep/labels.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"

#include <algorithm>

namespace lungprep {

std::string_view to_string(Diagnosis d) {
    switch (d) {
        case Diagnosis::CI: return "CI";
        case Diagnosis::CP: return "CP";
        case Diagnosis::N: return "N";
    }
    return "?";
}

std::optional<Diagnosis> parse_diagnosis(std::string_view text) {
    for (auto d : kAllDiagnoses) {
        if (text == to_string(d)) return d;
    }
    return std::nullopt;
}

std::vector<Diagnosis> parse_diagnosis_list(std::string_view text) {
    std::vector<Diagnosis> out;
    for (const auto& field : csv::split(text)) {
        const std::string label = csv::trim(field);
        const auto d = parse_diagnosis(label);
        if (!d) throw InputError("unknown class label '" + label + "' (expected CI, CP or N)");
        if (std::find(out.begin(), out.end(), *d) != out.end()) {
            throw InputError("duplicate class label '" + label + "'");
        }
        out.push_back(*d);
    }
    return out;
}

std::string join_diagnoses(const std::vector<Diagnosis>& list) {
    std::string out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i > 0) out += ',';
        out += to_string(list[i]);
    }
    return out;
}

}  // namespace lungprep
