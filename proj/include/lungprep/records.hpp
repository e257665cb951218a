#pragma once

#include "lungprep/segmentation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lungprep {

inline constexpr const char* kPreprocessLogName = "preprocess_log.csv";

// One preprocess_log.csv row. rect is "top,left,height,width" (quoted) or
// empty when the slice was rejected.
struct LogEntry {
    std::string image_id;
    bool selected = false;
    double dark_fraction = 0.0;
    std::optional<Rect> rect;
    std::string reason;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

LogEntry log_entry(const PreprocessedRecord& record);
std::string render_log(std::vector<LogEntry> entries);  // sorted by image_id
std::vector<LogEntry> read_log(const std::filesystem::path& path);

// <dir>/<id>_gray.pgm (8-bit) and <dir>/<id>_mask.pgm (0/255) for a
// selected record; nothing for a rejected one.
void write_record_rasters(const PreprocessedRecord& record, const std::filesystem::path& dir);

struct CroppedSlice {
    FloatImage gray;
    BinaryMask mask;
};

CroppedSlice read_record_rasters(const std::string& image_id, const std::filesystem::path& dir);

}  // namespace lungprep
