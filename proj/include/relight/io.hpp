#pragma once

// PNG (8/16-bit) and JPEG decoding, 8-bit and 16-bit PNG encoding.
//
// libpng and libjpeg report errors through longjmp. Each codec function
// declares its C++ objects before the setjmp call, so a jump back into the
// same frame never skips a destructor.

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "relight/image.hpp"

namespace relight {

/// Decoded samples before conversion to float. `max_value` is 255 or 65535.
struct DecodedPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::uint32_t max_value = 255;
    std::vector<std::uint16_t> samples;
};

namespace detail {

struct PngIoState {
    const std::uint8_t* data = nullptr;
    std::size_t size = 0;
    std::size_t pos = 0;
    std::vector<std::uint8_t>* sink = nullptr;
    char message[256] = {};
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* st = static_cast<PngIoState*>(png_get_error_ptr(png));
    std::snprintf(st->message, sizeof st->message, "%s", msg);
    png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* st = static_cast<PngIoState*>(png_get_io_ptr(png));
    if (st->pos + n > st->size) png_error(png, "unexpected end of PNG data");
    std::memcpy(out, st->data + st->pos, n);
    st->pos += n;
}

inline void png_write_to_memory(png_structp png, png_bytep in, png_size_t n) {
    auto* st = static_cast<PngIoState*>(png_get_io_ptr(png));
    st->sink->insert(st->sink->end(), in, in + n);
}

inline void png_flush_noop(png_structp) {}

inline bool decode_png(std::span<const std::uint8_t> bytes, DecodedPixels& out, std::string& error) {
    PngIoState state;
    state.data = bytes.data();
    state.size = bytes.size();
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler,
                                             png_warning_handler);
    if (!png) {
        error = "png_create_read_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        error = "png_create_info_struct failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        error = state.message;
        return false;
    }
    png_set_read_fn(png, &state, png_read_from_memory);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    const bool wide = png_get_bit_depth(png, info) == 16;
    out.max_value = wide ? 65535u : 255u;

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = raw.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t count = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(count);
    if (wide) {
        for (std::size_t i = 0; i < count; ++i)
            out.samples[i] = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) out.samples[i] = raw[i];
    }
    return true;
}

struct JpegErrorState {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX] = {};
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* st = reinterpret_cast<JpegErrorState*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, st->message);
    std::longjmp(st->jump, 1);
}

inline bool decode_jpeg(std::span<const std::uint8_t> bytes, DecodedPixels& out, std::string& error) {
    jpeg_decompress_struct cinfo;
    JpegErrorState err;
    std::vector<std::uint8_t> line;

    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        error = err.message;
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space != JCS_GRAYSCALE) cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.channels = cinfo.output_components;
    out.max_value = 255;
    const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
    out.samples.resize(stride * out.height);
    line.resize(stride);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = line.data();
        const std::size_t y = cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
        std::copy(line.begin(), line.end(), out.samples.begin() + y * stride);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

/// Encodes 8- or 16-bit samples (1 or 3 channels) as PNG with fixed settings,
/// so identical pixels always produce identical bytes.
inline bool encode_png(const DecodedPixels& px, std::vector<std::uint8_t>& bytes, std::string& error) {
    PngIoState state;
    state.sink = &bytes;
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler,
                                              png_warning_handler);
    if (!png) {
        error = "png_create_write_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        error = "png_create_info_struct failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        error = state.message;
        return false;
    }
    const bool wide = px.max_value > 255;
    const std::size_t count = static_cast<std::size_t>(px.width) * px.height * px.channels;
    raw.resize(count * (wide ? 2 : 1));
    for (std::size_t i = 0; i < count; ++i) {
        if (wide) {
            raw[2 * i] = static_cast<std::uint8_t>(px.samples[i] >> 8);
            raw[2 * i + 1] = static_cast<std::uint8_t>(px.samples[i] & 0xff);
        } else {
            raw[i] = static_cast<std::uint8_t>(px.samples[i]);
        }
    }
    const std::size_t rowbytes = static_cast<std::size_t>(px.width) * px.channels * (wide ? 2 : 1);
    rows.resize(px.height);
    for (int y = 0; y < px.height; ++y) rows[y] = raw.data() + rowbytes * y;

    png_set_write_fn(png, &state, png_write_to_memory, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, px.width, px.height, wide ? 16 : 8,
                 px.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorKind::FileNotFound, path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileNotFound, path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a temporary sibling and renames, so readers never observe
/// a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Unwritable, path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::Unwritable, path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Unwritable, path.string());
    }
}

inline std::uint16_t quantize(float v, std::uint32_t max_value) noexcept {
    const double s = std::clamp(static_cast<double>(v), 0.0, 1.0) * max_value;
    return static_cast<std::uint16_t>(std::floor(s + 0.5));
}

} // namespace detail

/// Decodes PNG or JPEG bytes, dispatching on the file signature.
inline DecodedPixels decode_image(std::span<const std::uint8_t> bytes, const std::string& label) {
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    DecodedPixels px;
    std::string error;
    bool ok = false;
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) {
        ok = detail::decode_png(bytes, px, error);
    } else if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
        ok = detail::decode_jpeg(bytes, px, error);
    } else {
        throw Error(ErrorKind::UnsupportedFormat, label);
    }
    if (!ok) throw Error(ErrorKind::CorruptData, label + ": " + error);
    if (px.width < 1 || px.height < 1 || (px.channels != 1 && px.channels != 3))
        throw Error(ErrorKind::UnsupportedFormat, label + ": unexpected channel layout");
    return px;
}

inline DecodedPixels read_pixels(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return decode_image(bytes, path.string());
}

/// Loads an 8/16-bit PNG or a JPEG as RGB in [0,1]; gray is replicated.
inline ImageRGB load_image(const std::filesystem::path& path) {
    const auto px = read_pixels(path);
    ImageRGB img(px.width, px.height);
    const float scale = 1.0f / static_cast<float>(px.max_value);
    auto dst = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        for (int c = 0; c < 3; ++c)
            dst[3 * i + c] = px.samples[i * px.channels + (px.channels == 1 ? 0 : c)] * scale;
    return img;
}

namespace detail {
template <class Tag>
Raster<1, Tag> load_plane(const std::filesystem::path& path) {
    const auto px = read_pixels(path);
    Raster<1, Tag> out(px.width, px.height);
    const double scale = 1.0 / px.max_value;
    auto dst = out.data();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        double v = 0.0;
        for (int c = 0; c < px.channels; ++c) v += px.samples[i * px.channels + c];
        dst[i] = static_cast<float>(v / px.channels * scale);
    }
    return out;
}
} // namespace detail

/// Single-channel PNG mask; RGB inputs are averaged.
inline Mask load_mask(const std::filesystem::path& path) { return detail::load_plane<MaskTag>(path); }

/// 16-bit (or 8-bit) single-channel PNG depth, scaled to [0,1].
inline DepthMap load_depth(const std::filesystem::path& path) { return detail::load_plane<DepthTag>(path); }

/// 8-bit PNG bytes, quantized with round-half-up.
template <int C, class Tag>
std::vector<std::uint8_t> encode_png8(const Raster<C, Tag>& r) {
    static_assert(C == 1 || C == 3);
    DecodedPixels px;
    px.width = r.width();
    px.height = r.height();
    px.channels = C;
    px.max_value = 255;
    px.samples.resize(r.data().size());
    for (std::size_t i = 0; i < px.samples.size(); ++i) px.samples[i] = detail::quantize(r.data()[i], 255);
    std::vector<std::uint8_t> bytes;
    std::string error;
    if (!detail::encode_png(px, bytes, error)) throw Error(ErrorKind::Unwritable, error);
    return bytes;
}

template <int C, class Tag>
void save_png8(const Raster<C, Tag>& r, const std::filesystem::path& path) {
    detail::write_file_atomic(path, encode_png8(r));
}

inline void save_image(const ImageRGB& img, const std::filesystem::path& path) { save_png8(img, path); }

/// 16-bit single-channel PNG, the depth sidecar format.
template <class Tag>
void save_png16(const Raster<1, Tag>& r, const std::filesystem::path& path) {
    DecodedPixels px;
    px.width = r.width();
    px.height = r.height();
    px.channels = 1;
    px.max_value = 65535;
    px.samples.resize(r.data().size());
    for (std::size_t i = 0; i < px.samples.size(); ++i) px.samples[i] = detail::quantize(r.data()[i], 65535);
    std::vector<std::uint8_t> bytes;
    std::string error;
    if (!detail::encode_png(px, bytes, error)) throw Error(ErrorKind::Unwritable, error);
    detail::write_file_atomic(path, bytes);
}

} // namespace relight
