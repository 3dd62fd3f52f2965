#include "fluoroforge/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include "fluoroforge/error.hpp"
#include "fluoroforge/files.hpp"

namespace fluoroforge {

namespace {

struct ErrorState {
    char message[256] = {};
};

void on_error(png_structp png, png_const_charp msg) {
    auto* state = static_cast<ErrorState*>(png_get_error_ptr(png));
    std::strncpy(state->message, msg, sizeof(state->message) - 1);
    png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct WriteBuffer {
    std::string bytes;
};

void write_to_buffer(png_structp png, png_bytep data, png_size_t length) {
    static_cast<WriteBuffer*>(png_get_io_ptr(png))->bytes.append(reinterpret_cast<const char*>(data), length);
}

void flush_buffer(png_structp) {}

struct ReadCursor {
    std::string_view bytes;
    std::size_t offset = 0;
};

void read_from_buffer(png_structp png, png_bytep data, png_size_t length) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->bytes.size() - cursor->offset < length) png_error(png, "unexpected end of PNG data");
    std::memcpy(data, cursor->bytes.data() + cursor->offset, length);
    cursor->offset += length;
}

std::vector<png_byte> pack_rows(const PngData& p) {
    const std::size_t bytes_per_sample = p.bit_depth == 16 ? 2 : 1;
    std::vector<png_byte> out(p.samples.size() * bytes_per_sample);
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
        if (bytes_per_sample == 2) {
            out[2 * i] = png_byte(p.samples[i] >> 8);
            out[2 * i + 1] = png_byte(p.samples[i] & 0xff);
        } else {
            out[i] = png_byte(p.samples[i]);
        }
    }
    return out;
}

}  // namespace

std::string encode_png(const PngData& p) {
    if (p.width <= 0 || p.height <= 0) throw Error("PNG dimensions must be positive");
    if (p.channels != 1 && p.channels != 3) throw Error("PNG channels must be 1 or 3");
    if (p.bit_depth != 8 && p.bit_depth != 16) throw Error("PNG bit depth must be 8 or 16");
    if (p.samples.size() != std::size_t(p.width) * std::size_t(p.height) * std::size_t(p.channels))
        throw Error("PNG sample count does not match dimensions");
    if (p.bit_depth == 8 && std::any_of(p.samples.begin(), p.samples.end(), [](auto s) { return s > 255; }))
        throw Error("8-bit PNG sample out of range");

    const std::vector<png_byte> packed = pack_rows(p);
    const std::size_t stride = packed.size() / std::size_t(p.height);
    std::vector<png_bytep> rows(std::size_t(p.height));
    for (int r = 0; r < p.height; ++r) rows[std::size_t(r)] = const_cast<png_bytep>(packed.data() + std::size_t(r) * stride);

    std::vector<std::string> keys, values;
    for (const auto& [k, v] : p.text) keys.push_back(k), values.push_back(v);
    std::vector<png_text> text(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        text[i] = {};
        text[i].compression = PNG_TEXT_COMPRESSION_NONE;
        text[i].key = keys[i].data();
        text[i].text = values[i].data();
        text[i].text_length = values[i].size();
    }

    WriteBuffer buffer;
    ErrorState state;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, on_error, on_warning);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(std::string("PNG encode failed: ") + state.message);
    }
    png_set_write_fn(png, &buffer, write_to_buffer, flush_buffer);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, png_uint_32(p.width), png_uint_32(p.height), p.bit_depth,
                 p.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (!text.empty()) png_set_text(png, info, text.data(), int(text.size()));
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(buffer.bytes);
}

PngData decode_png(std::string_view bytes) {
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw LoadError("not a PNG file");
    ReadCursor cursor{bytes, 0};
    ErrorState state;
    PngData out;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, on_error, on_warning);
    if (!png) throw LoadError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw LoadError(std::string("PNG decode failed: ") + state.message);
    }
    png_set_read_fn(png, &cursor, read_from_buffer);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int width = int(png_get_image_width(png, info));
    const int height = int(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * std::size_t(height));
    rows.resize(std::size_t(height));
    for (int r = 0; r < height; ++r) rows[std::size_t(r)] = buffer.data() + std::size_t(r) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, info);

    png_textp text = nullptr;
    const int n_text = png_get_text(png, info, &text, nullptr);
    for (int i = 0; i < n_text; ++i) out.text[text[i].key] = std::string(text[i].text, text[i].text_length);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3) throw LoadError("unsupported PNG channel count");
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.bit_depth = depth;
    const std::size_t n = std::size_t(width) * std::size_t(height) * std::size_t(channels);
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = i / (std::size_t(width) * std::size_t(channels));
        const std::size_t c = i % (std::size_t(width) * std::size_t(channels));
        const png_byte* row = buffer.data() + r * stride;
        out.samples[i] = depth == 16 ? std::uint16_t((row[2 * c] << 8) | row[2 * c + 1]) : row[c];
    }
    return out;
}

PngData read_png(const std::filesystem::path& path) {
    try {
        return decode_png(read_file(path));
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const PngData& png) { write_file_atomic(path, encode_png(png)); }

PngData gray16_from_image(const Image& img) {
    PngData p;
    p.width = img.width;
    p.height = img.height;
    p.channels = 1;
    p.bit_depth = 16;
    p.samples.resize(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        p.samples[i] = std::uint16_t(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 65535.0));
    return p;
}

Image image_from_png(const PngData& p) {
    if (p.channels != 1) throw LoadError("expected a grayscale PNG");
    const double scale = p.bit_depth == 16 ? 65535.0 : 255.0;
    Image img(p.width, p.height);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = p.samples[i] / scale;
    return img;
}

}  // namespace fluoroforge
