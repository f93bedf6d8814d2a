#include "aeromtl/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (remaining() < n) {
            fail(ErrorCode::corrupt_checkpoint, std::string("truncated ") + what + " at byte offset " +
                                                    std::to_string(pos_));
        }
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32(const char* what) {
        auto s = take(4, what);
        return static_cast<std::uint32_t>(s[0]) | static_cast<std::uint32_t>(s[1]) << 8 |
               static_cast<std::uint32_t>(s[2]) << 16 | static_cast<std::uint32_t>(s[3]) << 24;
    }
    std::uint8_t u8(const char* what) { return take(1, what)[0]; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const std::string& config_text, std::span<const Parameter> params) {
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, static_cast<std::uint32_t>(config_text.size()));
    out.insert(out.end(), config_text.begin(), config_text.end());
    for (const auto& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.insert(out.end(), p.name.begin(), p.name.end());
        const Shape& shape = p.value.shape();
        out.push_back(static_cast<std::uint8_t>(shape.size()));
        for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : p.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    put_u32(out, crc32(out));
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kCheckpointMagic) + 8 ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        fail(ErrorCode::corrupt_checkpoint, "missing MTLCKPT1 magic");
    }
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    const std::uint32_t stored = tail.u32("crc");
    const std::uint32_t actual = crc32(body);
    if (stored != actual) fail(ErrorCode::corrupt_checkpoint, "CRC32 mismatch");

    Reader in(body);
    in.take(sizeof(kCheckpointMagic), "magic");
    Checkpoint ck;
    const std::uint32_t config_len = in.u32("config length");
    const auto config = in.take(config_len, "config text");
    ck.config_text.assign(config.begin(), config.end());
    while (in.remaining() > 0) {
        NamedTensor t;
        const std::uint32_t name_len = in.u32("name length");
        const auto name = in.take(name_len, "parameter name");
        t.name.assign(name.begin(), name.end());
        const std::uint8_t rank = in.u8("rank");
        std::size_t count = 1;
        for (std::uint8_t i = 0; i < rank; ++i) {
            t.shape.push_back(in.u32("dimension"));
            count *= t.shape.back();
        }
        if (count > in.remaining() / 4) {
            fail(ErrorCode::corrupt_checkpoint, "payload of '" + t.name + "' exceeds file at byte offset " +
                                                    std::to_string(in.offset()));
        }
        t.values.resize(count);
        for (auto& v : t.values) v = std::bit_cast<float>(in.u32("payload"));
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) fail(ErrorCode::io, "failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_checkpoint(const std::filesystem::path& path, const std::string& config_text, const MtlModel& model) {
    write_file_atomic(path, encode_checkpoint(config_text, model.registry()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    try {
        return decode_checkpoint(read_file(path));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::corrupt_checkpoint) throw;
        fail(ErrorCode::corrupt_checkpoint, path.string() + ": " + e.what());
    }
}

void load_parameters(MtlModel& model, const Checkpoint& checkpoint) {
    const auto registry = model.registry();
    if (checkpoint.tensors.size() != registry.size()) {
        fail(ErrorCode::corrupt_checkpoint, "checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                                                " tensors, model expects " + std::to_string(registry.size()));
    }
    for (const auto& t : checkpoint.tensors) {
        const std::size_t idx = model.find(t.name);
        if (idx == registry.size()) fail(ErrorCode::corrupt_checkpoint, "unknown parameter '" + t.name + "'");
        Tensor target = registry[idx].value;
        if (target.shape() != t.shape) {
            fail(ErrorCode::corrupt_checkpoint, "parameter '" + t.name + "' has shape " + shape_to_string(t.shape) +
                                                    ", model expects " + shape_to_string(target.shape()));
        }
        std::copy(t.values.begin(), t.values.end(), target.data().begin());
    }
}

}  // namespace aeromtl
