#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elevest::io {

// Little-endian byte sink used by every binary artifact.
class ByteWriter {
public:
    void magic(std::string_view tag);
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void f32(float v);
    void f32s(std::span<const float> values);
    void f32s(std::span<const double> values);
    void str16(std::string_view s);
    void bytes(std::span<const std::uint8_t> data);

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader; throws TruncatedError past the end.
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data) : data_(std::move(data)) {}
    static ByteReader open(const std::filesystem::path& path);

    void expect_magic(std::string_view tag);
    std::uint16_t u16();
    std::uint32_t u32();
    float f32();
    std::vector<float> f32s(std::size_t n);
    std::string str16();

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    const std::uint8_t* take(std::size_t n);

    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace elevest::io
