#include "lungprep/manifest.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace lungprep {

std::string ManifestRow::image_id() const {
    return std::filesystem::path(image_path).stem().string();
}

std::vector<ManifestRow> parse_manifest(const std::vector<std::string>& lines) {
    std::size_t pos = 0;
    while (pos < lines.size() && csv::trim(lines[pos]).empty()) ++pos;
    if (pos >= lines.size()) throw InputError("manifest: missing header");
    const auto header = csv::split(lines[pos++]);
    constexpr std::array<std::string_view, 4> kColumns{"image_path", "patient_id", "label", "source"};
    std::array<std::size_t, 4> index{};
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        const auto it = std::find_if(header.begin(), header.end(),
                                     [&](const std::string& h) { return csv::trim(h) == kColumns[k]; });
        if (it == header.end()) throw InputError("manifest: missing column " + std::string(kColumns[k]));
        index[k] = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<ManifestRow> rows;
    std::set<std::string> paths;
    for (; pos < lines.size(); ++pos) {
        if (csv::trim(lines[pos]).empty()) continue;
        const std::string where = "manifest line " + std::to_string(pos + 1);
        const auto fields = csv::split(lines[pos]);
        if (fields.size() != header.size()) throw InputError(where + ": wrong number of columns");
        ManifestRow row;
        row.image_path = csv::trim(fields[index[0]]);
        row.patient_id = csv::trim(fields[index[1]]);
        const std::string label = csv::trim(fields[index[2]]);
        row.source = csv::trim(fields[index[3]]);
        const auto d = parse_diagnosis(label);
        if (!d) throw InputError(where + ": bad label '" + label + "' (expected CI, CP or N)");
        row.label = *d;
        if (row.image_path.empty()) throw InputError(where + ": empty image_path");
        if (row.patient_id.empty()) throw InputError(where + ": empty patient_id");
        if (!paths.insert(row.image_path).second) {
            throw InputError(where + ": duplicate image_path " + row.image_path);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    return parse_manifest(csv::read_lines(path));
}

std::string render_manifest(std::span<const ManifestRow> rows) {
    std::string out = "image_path,patient_id,label,source\n";
    for (const auto& r : rows) {
        out += csv::join({r.image_path, r.patient_id, std::string(to_string(r.label)), r.source}) + "\n";
    }
    return out;
}

void write_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& path) {
    write_file_text(path, render_manifest(rows));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::uint64_t splitmix64(std::uint64_t state) {
    std::uint64_t z = state + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t patient_key(std::string_view patient_id, std::uint64_t seed) {
    return splitmix64(seed ^ fnv1a64(patient_id));
}

Split split_by_patient(std::span<const ManifestRow> rows, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InputError("split: test fraction must be in (0, 1)");
    }
    std::map<std::string, std::size_t> images_per_patient;
    for (const auto& r : rows) ++images_per_patient[r.patient_id];
    if (images_per_patient.size() < 2) {
        throw InputError("split: need at least 2 distinct patients");
    }
    std::vector<std::pair<std::uint64_t, std::string>> keyed;
    for (const auto& [pid, count] : images_per_patient) keyed.emplace_back(patient_key(pid, seed), pid);
    std::sort(keyed.begin(), keyed.end());

    const double target = test_fraction * static_cast<double>(rows.size());
    Split split;
    std::set<std::string> test_set;
    std::size_t test_images = 0;
    for (const auto& [key, pid] : keyed) {
        if (static_cast<double>(test_images) >= target) break;
        test_set.insert(pid);
        split.test_patients.push_back(pid);
        test_images += images_per_patient[pid];
    }
    for (const auto& r : rows) {
        (test_set.contains(r.patient_id) ? split.test : split.train).push_back(r);
    }
    return split;
}

std::string split_summary(const Split& split) {
    const auto counts = [](const std::vector<ManifestRow>& side) {
        std::array<std::size_t, 3> c{};
        for (const auto& r : side) ++c[static_cast<std::size_t>(r.label)];
        return c;
    };
    const auto train = counts(split.train);
    const auto test = counts(split.test);
    std::string out = "train=" + std::to_string(split.train.size()) + " test=" + std::to_string(split.test.size());
    for (auto d : kAllDiagnoses) {
        out += " train_" + std::string(to_string(d)) + "=" + std::to_string(train[static_cast<std::size_t>(d)]);
    }
    for (auto d : kAllDiagnoses) {
        out += " test_" + std::string(to_string(d)) + "=" + std::to_string(test[static_cast<std::size_t>(d)]);
    }
    return out;
}

}  // namespace lungprep
