#include "lungprep/records.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <charconv>

namespace lungprep {

namespace {

int parse_int(const std::string& text, const std::string& where) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError(where + ": bad integer '" + text + "'");
    }
    return value;
}

}  // namespace

LogEntry log_entry(const PreprocessedRecord& record) {
    return {record.image_id, record.selected, record.dark_fraction, record.crop_rect, record.reason};
}

std::string render_log(std::vector<LogEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const LogEntry& a, const LogEntry& b) { return a.image_id < b.image_id; });
    std::string out = "image_id,selected,dark_fraction,rect,reason\n";
    for (const auto& e : entries) {
        std::string rect;
        if (e.rect) {
            rect = std::to_string(e.rect->top) + "," + std::to_string(e.rect->left) + "," +
                   std::to_string(e.rect->height) + "," + std::to_string(e.rect->width);
        }
        out += csv::join({e.image_id, e.selected ? "1" : "0", csv::fixed(e.dark_fraction, 6), rect, e.reason}) +
               "\n";
    }
    return out;
}

std::vector<LogEntry> read_log(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty() || !lines.front().starts_with("image_id,selected")) {
        throw InputError("preprocess log: missing header in " + path.string());
    }
    std::vector<LogEntry> entries;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        const std::string where = "preprocess log line " + std::to_string(i + 1);
        const auto f = csv::split(lines[i]);
        if (f.size() != 5) throw InputError(where + ": expected 5 columns");
        LogEntry e;
        e.image_id = f[0];
        if (f[1] != "0" && f[1] != "1") throw InputError(where + ": selected must be 0 or 1");
        e.selected = f[1] == "1";
        e.dark_fraction = csv::parse_real(f[2], where);
        if (!f[3].empty()) {
            const auto parts = csv::split(f[3]);
            if (parts.size() != 4) throw InputError(where + ": rect must have 4 fields");
            e.rect = Rect{parse_int(parts[0], where), parse_int(parts[1], where), parse_int(parts[2], where),
                          parse_int(parts[3], where)};
        }
        e.reason = f[4];
        if (e.selected != e.rect.has_value()) throw InputError(where + ": rect present iff selected");
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_record_rasters(const PreprocessedRecord& record, const std::filesystem::path& dir) {
    if (!record.selected) return;
    if (!record.gray || !record.mask) {
        throw InvariantError("selected record without rasters: " + record.image_id);
    }
    save_pgm(to_u8(*record.gray), dir / (record.image_id + "_gray.pgm"));
    save_pgm(mask_to_gray(*record.mask), dir / (record.image_id + "_mask.pgm"));
}

CroppedSlice read_record_rasters(const std::string& image_id, const std::filesystem::path& dir) {
    const GrayImage gray = load_image(dir / (image_id + "_gray.pgm"));
    const GrayImage mask = load_image(dir / (image_id + "_mask.pgm"));
    if (gray.width() != mask.width() || gray.height() != mask.height()) {
        throw InputError("record " + image_id + ": gray and mask sizes differ");
    }
    std::vector<std::uint8_t> bits(mask.samples().size());
    std::transform(mask.samples().begin(), mask.samples().end(), bits.begin(),
                   [](std::uint16_t v) { return static_cast<std::uint8_t>(v != 0); });
    return {to_float(gray), BinaryMask(mask.width(), mask.height(), std::move(bits))};
}

}  // namespace lungprep
