#include "aeromtl/raster_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "aeromtl/checkpoint.hpp"
#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

[[noreturn]] void parse_error(const std::string& format, std::size_t offset, const std::string& what) {
    fail(ErrorCode::parse, format + " at byte " + std::to_string(offset) + ": " + what);
}

// Netpbm-style header reader: whitespace separated tokens, '#' comments.
class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, std::string format)
        : bytes_(bytes), format_(std::move(format)) {}

    std::size_t offset() const noexcept { return pos_; }

    std::string magic() {
        if (bytes_.size() < 2) parse_error(format_, 0, "file too short for a magic number");
        pos_ = 2;
        return std::string(reinterpret_cast<const char*>(bytes_.data()), 2);
    }

    std::string token(bool allow_comments) {
        skip_space(allow_comments);
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
        if (pos_ == start) parse_error(format_, start, "expected a header field");
        return std::string(reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start);
    }

    std::size_t positive_int(bool allow_comments, const char* field) {
        const std::size_t start = pos_;
        const std::string t = token(allow_comments);
        std::size_t value = 0;
        for (char c : t) {
            if (c < '0' || c > '9') parse_error(format_, start, std::string("invalid ") + field + " '" + t + "'");
            value = value * 10 + static_cast<std::size_t>(c - '0');
            if (value > (std::size_t{1} << 30)) parse_error(format_, start, std::string(field) + " is too large");
        }
        if (value == 0) parse_error(format_, start, std::string(field) + " must be positive");
        return value;
    }

    // Exactly one whitespace byte separates the header from the payload.
    std::size_t end_of_header() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            parse_error(format_, pos_, "expected a single whitespace byte before the payload");
        }
        return ++pos_;
    }

private:
    void skip_space(bool allow_comments) {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (allow_comments && bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::string format_;
    std::size_t pos_ = 0;
};

void require_payload(const std::string& format, std::span<const std::uint8_t> bytes, std::size_t offset,
                     std::size_t needed) {
    if (bytes.size() - offset < needed) {
        parse_error(format, bytes.size(), "truncated payload, expected " + std::to_string(needed) +
                                              " bytes from offset " + std::to_string(offset));
    }
}

bool is_elevation(RasterKind kind) {
    return kind == RasterKind::height || kind == RasterKind::dsm || kind == RasterKind::dem;
}

void append(std::vector<std::uint8_t>& out, const std::string& text) { out.insert(out.end(), text.begin(), text.end()); }

std::uint8_t to_byte(float v) {
    if (!(v > 0.0f)) return 0;
    if (v >= 255.0f) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace

Raster decode_pfm(std::span<const std::uint8_t> bytes, RasterKind kind) {
    if (!is_elevation(kind)) fail(ErrorCode::invalid_argument, "PFM holds height, dsm or dem rasters");
    HeaderReader header(bytes, "PFM");
    const std::string magic = header.magic();
    std::size_t channels = 0;
    if (magic == "Pf") {
        channels = 1;
    } else if (magic == "PF") {
        channels = 3;
    } else {
        parse_error("PFM", 0, "bad magic '" + magic + "'");
    }
    const std::size_t width = header.positive_int(false, "width");
    const std::size_t height = header.positive_int(false, "height");
    const std::size_t scale_at = header.offset();
    const std::string scale_text = header.token(false);
    double scale = 0.0;
    try {
        std::size_t used = 0;
        scale = std::stod(scale_text, &used);
        if (used != scale_text.size()) throw std::invalid_argument(scale_text);
    } catch (const std::exception&) {
        parse_error("PFM", scale_at, "invalid scale '" + scale_text + "'");
    }
    if (scale == 0.0 || !std::isfinite(scale)) parse_error("PFM", scale_at, "scale must be finite and nonzero");
    const bool little = scale < 0.0;
    const std::size_t offset = header.end_of_header();
    require_payload("PFM", bytes, offset, width * height * channels * 4);

    Raster raster(kind, width, height, channels);
    const std::uint8_t* p = bytes.data() + offset;
    for (std::size_t row = 0; row < height; ++row) {
        const std::size_t y = height - 1 - row;
        for (std::size_t x = 0; x < width; ++x) {
            bool valid = true;
            for (std::size_t c = 0; c < channels; ++c, p += 4) {
                std::uint32_t bits;
                std::memcpy(&bits, p, 4);
                if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
                const float v = std::bit_cast<float>(bits);
                raster.at(c, y, x) = v;
                if (std::isnan(v)) valid = false;
            }
            if (!valid) raster.set_valid(y, x, false);
        }
    }
    return raster;
}

std::vector<std::uint8_t> encode_pfm(const Raster& raster) {
    if (!is_elevation(raster.kind())) fail(ErrorCode::invalid_argument, "PFM holds height, dsm or dem rasters");
    if (raster.channels() != 1 && raster.channels() != 3) {
        fail(ErrorCode::invalid_argument, "PFM supports 1 or 3 channels, got " + std::to_string(raster.channels()));
    }
    std::vector<std::uint8_t> out;
    append(out, std::string(raster.channels() == 1 ? "Pf" : "PF") + "\n" + std::to_string(raster.width()) + " " +
                    std::to_string(raster.height()) + "\n-1.0\n");
    out.reserve(out.size() + raster.values().size() * 4);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t row = 0; row < raster.height(); ++row) {
        const std::size_t y = raster.height() - 1 - row;
        for (std::size_t x = 0; x < raster.width(); ++x) {
            for (std::size_t c = 0; c < raster.channels(); ++c) {
                const float v = raster.valid(y, x) ? raster.at(c, y, x) : nan;
                std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
                if constexpr (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
                std::uint8_t b[4];
                std::memcpy(b, &bits, 4);
                out.insert(out.end(), b, b + 4);
            }
        }
    }
    return out;
}

namespace {

Raster decode_netpbm(std::span<const std::uint8_t> bytes, const char* expected_magic, const char* format,
                     RasterKind kind, std::size_t channels) {
    HeaderReader header(bytes, format);
    const std::string magic = header.magic();
    if (magic != expected_magic) parse_error(format, 0, "bad magic '" + magic + "'");
    const std::size_t width = header.positive_int(true, "width");
    const std::size_t height = header.positive_int(true, "height");
    const std::size_t maxval_at = header.offset();
    const std::size_t maxval = header.positive_int(true, "maxval");
    if (maxval > 255) parse_error(format, maxval_at, "only 8-bit maxval is supported, got " + std::to_string(maxval));
    const std::size_t offset = header.end_of_header();
    require_payload(format, bytes, offset, width * height * channels);

    Raster raster(kind, width, height, channels);
    const std::uint8_t* p = bytes.data() + offset;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < channels; ++c) raster.at(c, y, x) = static_cast<float>(*p++);
            if (kind == RasterKind::labels && raster.at(0, y, x) == 255.0f) raster.set_valid(y, x, false);
        }
    }
    return raster;
}

}  // namespace

Raster decode_ppm(std::span<const std::uint8_t> bytes) { return decode_netpbm(bytes, "P6", "PPM", RasterKind::rgb, 3); }

std::vector<std::uint8_t> encode_ppm(const Raster& raster) {
    if (raster.channels() != 3) {
        fail(ErrorCode::invalid_argument, "PPM needs 3 channels, got " + std::to_string(raster.channels()));
    }
    std::vector<std::uint8_t> out;
    append(out, "P6\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n");
    for (std::size_t y = 0; y < raster.height(); ++y) {
        for (std::size_t x = 0; x < raster.width(); ++x) {
            for (std::size_t c = 0; c < 3; ++c) out.push_back(to_byte(raster.at(c, y, x)));
        }
    }
    return out;
}

Raster decode_pgm(std::span<const std::uint8_t> bytes, RasterKind kind) {
    if (kind != RasterKind::labels) fail(ErrorCode::invalid_argument, "PGM holds label rasters");
    return decode_netpbm(bytes, "P5", "PGM", kind, 1);
}

std::vector<std::uint8_t> encode_pgm(const Raster& raster) {
    if (raster.channels() != 1) {
        fail(ErrorCode::invalid_argument, "PGM needs 1 channel, got " + std::to_string(raster.channels()));
    }
    std::vector<std::uint8_t> out;
    append(out, "P5\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n");
    for (std::size_t y = 0; y < raster.height(); ++y) {
        for (std::size_t x = 0; x < raster.width(); ++x) {
            out.push_back(raster.valid(y, x) ? to_byte(raster.at(y, x)) : std::uint8_t{255});
        }
    }
    return out;
}

Raster read_raster(const std::filesystem::path& path, RasterKind kind) {
    const auto bytes = read_file(path);
    try {
        switch (kind) {
        case RasterKind::rgb: return decode_ppm(bytes);
        case RasterKind::labels: return decode_pgm(bytes, kind);
        default: return decode_pfm(bytes, kind);
        }
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_raster(const Raster& raster, const std::filesystem::path& path) {
    switch (raster.kind()) {
    case RasterKind::rgb: write_file_atomic(path, encode_ppm(raster)); break;
    case RasterKind::labels: write_file_atomic(path, encode_pgm(raster)); break;
    default: write_file_atomic(path, encode_pfm(raster)); break;
    }
}

}  // namespace aeromtl
