#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace glassynth {

/// Row-major 8-bit image with 3 (RGB) or 4 (RGBA) interleaved channels.
class RasterImage {
public:
    RasterImage() = default;

    /// Throws std::invalid_argument for zero dimensions or channels not in {3, 4}.
    RasterImage(int width, int height, int channels, std::uint8_t fill = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }

    std::span<std::uint8_t> pixel(int x, int y)
    {
        return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
    }
    std::span<const std::uint8_t> pixel(int x, int y) const
    {
        return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
    }

    std::vector<std::uint8_t>& data() noexcept { return data_; }
    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t offset(int x, int y) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Clamps to [0, 1], scales to 255 and rounds half away from zero.
std::uint8_t quantize_channel(double value);

/// (pixel - 127.5) / 128 per channel, H x W x C row-major.
std::vector<float> normalize_pixels(const RasterImage& image);

// Binary PPM (P6) for RGB and PAM (P7, TUPLTYPE RGB_ALPHA) for RGBA.
void write_ppm(const RasterImage& image, const std::filesystem::path& path);
void write_pam(const RasterImage& image, const std::filesystem::path& path);
/// Writes PPM for 3 channels, PAM for 4.
void write_image(const RasterImage& image, const std::filesystem::path& path);
/// Reads P6 (maxval 255) or P7 with DEPTH 3 or 4. Throws ParseError / IoError.
RasterImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_image(const RasterImage& image);
RasterImage decode_image(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

} // namespace glassynth
