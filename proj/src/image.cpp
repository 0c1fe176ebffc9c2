#include "glassynth/image.hpp"

#include "glassynth/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace glassynth {

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels)
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("image dimensions must be at least 1x1");
    if (channels != 3 && channels != 4)
        throw std::invalid_argument("image channels must be 3 or 4");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(channels),
                 fill);
}

std::uint8_t quantize_channel(double value)
{
    if (!(value > 0.0)) // also maps NaN to 0
        return 0;
    if (value >= 1.0)
        return 255;
    return static_cast<std::uint8_t>(std::round(value * 255.0));
}

std::vector<float> normalize_pixels(const RasterImage& image)
{
    std::vector<float> out;
    out.reserve(image.data().size());
    for (std::uint8_t v : image.data())
        out.push_back((static_cast<float>(v) - 127.5f) / 128.0f);
    return out;
}

std::vector<std::uint8_t> encode_image(const RasterImage& image)
{
    std::string header;
    if (image.channels() == 3) {
        header = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    } else {
        header = "P7\nWIDTH " + std::to_string(image.width()) + "\nHEIGHT " +
                 std::to_string(image.height()) + "\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n";
    }
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.data().begin(), image.data().end());
    return out;
}

namespace {

class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, std::string source)
        : bytes_(bytes), source_(std::move(source)) {}

    // Next whitespace-delimited token, skipping '#' comments.
    std::string token()
    {
        for (;;) {
            while (pos_ < bytes_.size() && std::isspace(bytes_[pos_]))
                advance();
            if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
                continue;
            }
            break;
        }
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]))
            out.push_back(static_cast<char>(bytes_[pos_++]));
        if (out.empty())
            fail("unexpected end of header");
        return out;
    }

    int integer()
    {
        const std::string t = token();
        try {
            std::size_t used = 0;
            const int v = std::stoi(t, &used);
            if (used != t.size())
                fail("expected integer, got '" + t + "'");
            return v;
        } catch (const std::logic_error&) {
            fail("expected integer, got '" + t + "'");
        }
    }

    // Consumes exactly one whitespace byte that terminates the header.
    void end_of_header()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            fail("missing whitespace after header");
        advance();
    }

    void skip_line()
    {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
            ++pos_;
        if (pos_ < bytes_.size())
            advance();
    }

    std::size_t position() const { return pos_; }
    std::size_t line() const { return line_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

private:
    void advance()
    {
        if (bytes_[pos_] == '\n')
            ++line_;
        ++pos_;
    }

    std::span<const std::uint8_t> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

} // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes, const std::string& source)
{
    HeaderReader reader(bytes, source);
    const std::string magic = reader.token();
    int width = 0, height = 0, depth = 0, maxval = 0;
    if (magic == "P6") {
        width = reader.integer();
        height = reader.integer();
        maxval = reader.integer();
        depth = 3;
        reader.end_of_header();
    } else if (magic == "P7") {
        std::string tupltype;
        for (;;) {
            const std::string key = reader.token();
            if (key == "ENDHDR")
                break;
            if (key == "WIDTH")
                width = reader.integer();
            else if (key == "HEIGHT")
                height = reader.integer();
            else if (key == "DEPTH")
                depth = reader.integer();
            else if (key == "MAXVAL")
                maxval = reader.integer();
            else if (key == "TUPLTYPE")
                tupltype = reader.token();
            else
                reader.fail("unknown PAM header key '" + key + "'");
        }
        reader.skip_line();
        if (depth != 3 && depth != 4)
            reader.fail("unsupported PAM depth " + std::to_string(depth));
    } else {
        reader.fail("unsupported image magic '" + magic + "'");
    }
    if (maxval != 255)
        reader.fail("only maxval 255 is supported");
    if (width < 1 || height < 1)
        reader.fail("invalid image dimensions");

    RasterImage image(width, height, depth);
    const std::size_t need = image.data().size();
    if (bytes.size() - reader.position() != need)
        reader.fail("pixel payload has " + std::to_string(bytes.size() - reader.position()) +
                    " bytes, expected " + std::to_string(need));
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(reader.position()), bytes.end(),
              image.data().begin());
    return image;
}

namespace {

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

} // namespace

void write_ppm(const RasterImage& image, const std::filesystem::path& path)
{
    if (image.channels() != 3)
        throw std::invalid_argument("PPM output requires an RGB image");
    write_bytes(encode_image(image), path);
}

void write_pam(const RasterImage& image, const std::filesystem::path& path)
{
    if (image.channels() != 4)
        throw std::invalid_argument("PAM output requires an RGBA image");
    write_bytes(encode_image(image), path);
}

void write_image(const RasterImage& image, const std::filesystem::path& path)
{
    write_bytes(encode_image(image), path);
}

RasterImage read_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open image '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_image(bytes, path.string());
}

} // namespace glassynth
