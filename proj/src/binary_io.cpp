#include "elevest/binary_io.hpp"

#include "elevest/errors.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

namespace elevest::io {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
}

template <typename T>
T get_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
    }
    return v;
}

}  // namespace

void ByteWriter::magic(std::string_view tag) {
    buf_.insert(buf_.end(), tag.begin(), tag.end());
}

void ByteWriter::u16(std::uint16_t v) { put_le(buf_, v); }

void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }

void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f32s(std::span<const float> values) {
    buf_.reserve(buf_.size() + 4 * values.size());
    for (float v : values) f32(v);
}

void ByteWriter::f32s(std::span<const double> values) {
    buf_.reserve(buf_.size() + 4 * values.size());
    for (double v : values) f32(static_cast<float>(v));
}

void ByteWriter::str16(std::string_view s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw ValidationError("string too long for u16 length prefix");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ByteReader ByteReader::open(const std::filesystem::path& path) { return ByteReader(read_file(path)); }

const std::uint8_t* ByteReader::take(std::size_t n) {
    if (remaining() < n) {
        throw TruncatedError("truncated payload at byte " + std::to_string(pos_) + " (need " +
                             std::to_string(n) + ", have " + std::to_string(remaining()) + ")");
    }
    const std::uint8_t* p = data_.data() + pos_;
    pos_ += n;
    return p;
}

void ByteReader::expect_magic(std::string_view tag) {
    if (remaining() < tag.size()) throw BadMagicError("file too short for magic '" + std::string(tag) + "'");
    const auto* p = take(tag.size());
    if (!std::equal(tag.begin(), tag.end(), p)) {
        throw BadMagicError("magic mismatch: expected '" + std::string(tag) + "'");
    }
}

std::uint16_t ByteReader::u16() { return get_le<std::uint16_t>(take(2)); }

std::uint32_t ByteReader::u32() { return get_le<std::uint32_t>(take(4)); }

float ByteReader::f32() { return std::bit_cast<float>(get_le<std::uint32_t>(take(4))); }

std::vector<float> ByteReader::f32s(std::size_t n) {
    if (remaining() / 4 < n) take(4 * n);  // throws
    std::vector<float> out(n);
    for (auto& v : out) v = f32();
    return out;
}

std::string ByteReader::str16() {
    const std::uint16_t n = u16();
    const auto* p = take(n);
    return {reinterpret_cast<const char*>(p), n};
}

}  // namespace elevest::io
