#include "nframe/image_io.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace nframe {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<std::uint8_t> interleave(const Image& image)
{
    const auto plane = image.raster().plane_size();
    std::vector<std::uint8_t> rgb(plane * 3);
    for (int c = 0; c < 3; ++c) {
        const auto src = image.raster().plane(c);
        for (std::size_t i = 0; i < plane; ++i) rgb[i * 3 + static_cast<std::size_t>(c)] = to_byte(src[i]);
    }
    return rgb;
}

Image deinterleave(int height, int width, const std::uint8_t* rgb)
{
    Raster raster(height, width);
    const auto plane = raster.plane_size();
    for (int c = 0; c < 3; ++c) {
        auto dst = raster.plane(c);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = rgb[i * 3 + static_cast<std::size_t>(c)] / 255.0;
    }
    return Image::from_raster(std::move(raster));
}

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Level -1 messages are corrupt-data warnings (truncated files decode as gray otherwise).
void jpeg_emit_message(j_common_ptr cinfo, int level)
{
    if (level < 0) jpeg_error_exit(cinfo);
}

Image read_png(const std::vector<std::uint8_t>& bytes, const fs::path& path)
{
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw Error(ErrorKind::Io, "cannot decode PNG " + path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
        std::string message = png.message;
        png_image_free(&png);
        throw Error(ErrorKind::Io, "cannot decode PNG " + path.string() + ": " + message);
    }
    return deinterleave(static_cast<int>(png.height), static_cast<int>(png.width), rgb.data());
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality)
{
    if (quality < 1 || quality > 100) {
        throw Error(ErrorKind::InvalidSpec, "jpeg quality must be in [1, 100]");
    }
    const std::vector<std::uint8_t> rgb = interleave(image);
    jpeg_compress_struct cinfo;
    JpegErrorManager err;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;

    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw Error(ErrorKind::Io, std::string("jpeg encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width());
    cinfo.image_height = static_cast<JDIMENSION>(image.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_compress(&cinfo, TRUE);
    const auto stride = static_cast<std::size_t>(image.width()) * 3;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(rgb.data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

Image decode_jpeg(const std::vector<std::uint8_t>& bytes)
{
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    std::vector<std::uint8_t> rgb;

    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_emit_message;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(ErrorKind::Io, std::string("jpeg decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    const auto stride = static_cast<std::size_t>(cinfo.output_width) * 3;
    rgb.resize(stride * cinfo.output_height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    const int height = static_cast<int>(cinfo.output_height);
    const int width = static_cast<int>(cinfo.output_width);
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return deinterleave(height, width, rgb.data());
}

Image read_image(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    static constexpr std::uint8_t png_magic[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(png_magic), std::end(png_magic), bytes.begin())) {
        return read_png(bytes, path);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        try {
            return decode_jpeg(bytes);
        } catch (const Error& e) {
            throw Error(ErrorKind::Io, path.string() + ": " + e.what());
        }
    }
    throw Error(ErrorKind::Io, "unsupported image format: " + path.string());
}

void write_png(const fs::path& path, const Image& image)
{
    const auto rgb = interleave(image);
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, rgb.data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + png.message);
    }
}

std::vector<fs::path> list_image_files(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::Io, "not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

}  // namespace nframe
