#include "lungprep/pgm.hpp"

#include "lungprep/error.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <iterator>

namespace lungprep {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Reads one whitespace-delimited decimal token, skipping '#' comments.
    std::uint64_t next_number() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw InputError("unsupported format: malformed PGM header");
        }
        std::uint64_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 0xFFFFFFFFull) {
                throw InputError("unsupported format: PGM header value too large");
            }
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw InputError("unsupported format: malformed PGM header");
        }
        ++pos_;
    }

    std::size_t position() const { return pos_; }
    void seek(std::size_t pos) { pos_ = pos; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

[[noreturn]] void reject_png(std::span<const std::uint8_t> bytes) {
    // IHDR: 8-byte magic, 4-byte length, "IHDR", w, h, bit depth, colour type.
    constexpr std::size_t kColourTypeOffset = 8 + 4 + 4 + 4 + 4 + 1;
    if (bytes.size() > kColourTypeOffset) {
        const auto colour_type = bytes[kColourTypeOffset];
        if (colour_type != 0) {
            throw InputError("multi-channel input");
        }
    }
    throw InputError("unsupported format: PNG decoding is not enabled in this build");
}

}  // namespace

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= kPngMagic.size() &&
        std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
        reject_png(bytes);
    }
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw InputError("unsupported format");
    }
    if (bytes[1] == '6' || bytes[1] == '3') {
        throw InputError("multi-channel input");
    }
    if (bytes[1] != '5') {
        throw InputError("unsupported format: only binary PGM (P5) is supported");
    }
    HeaderReader reader(bytes);
    reader.seek(2);
    const auto width = reader.next_number();
    const auto height = reader.next_number();
    const auto maxval = reader.next_number();
    reader.single_whitespace();
    if (width < 1 || height < 1 || width > 1u << 16 || height > 1u << 16) {
        throw InputError("unsupported format: PGM dimensions out of range");
    }
    if (maxval < 1 || maxval > 65535) {
        throw InputError("unsupported format: maxval outside 1..65535");
    }
    const bool wide = maxval > 255;
    const std::size_t count = width * height;
    const std::size_t need = count * (wide ? 2 : 1);
    const auto start = reader.position();
    if (bytes.size() - start < need) {
        throw InputError("unreadable file: truncated PGM raster");
    }
    std::vector<std::uint16_t> samples(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint16_t v = wide ? static_cast<std::uint16_t>((bytes[start + 2 * i] << 8) |
                                                                  bytes[start + 2 * i + 1])
                                     : bytes[start + i];
        if (v > maxval) {
            throw InputError("unreadable file: PGM sample exceeds maxval");
        }
        samples[i] = v;
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height), wide ? 16 : 8,
                     std::move(samples));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const bool wide = img.bit_depth() == 16;
    const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                               std::to_string(img.height()) + "\n" +
                               (wide ? "65535" : "255") + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.samples().size() * (wide ? 2 : 1));
    for (auto s : img.samples()) {
        if (wide) {
            out.push_back(static_cast<std::uint8_t>(s >> 8));
        }
        out.push_back(static_cast<std::uint8_t>(s & 0xFF));
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("unreadable file: " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("unwritable path: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

void write_file_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

GrayImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_image(bytes);
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    write_file_bytes(path, encode_pgm(img));
}

}  // namespace lungprep
