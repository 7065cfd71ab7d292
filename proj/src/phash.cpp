#include "groupsei/phash.h"

#include <png.h>
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <fstream>
#include <numbers>
#include <sstream>

namespace groupsei {

namespace {

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

std::string read_all(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw image_error("media " + path + ": unable to open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

gray_image decode_png(const std::string &path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw image_error("media " + path + ": " + image.message);
    image.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw image_error("media " + path + ": " + image.message);
    }
    gray_image out{image.width, image.height, {}};
    out.pixels.assign(buffer.begin(), buffer.end());
    return out;
}

struct jpeg_failure {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

gray_image decode_jpeg(const std::string &path, const std::string &bytes)
{
    jpeg_decompress_struct cinfo{};
    jpeg_failure err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = [](j_common_ptr c) {
        auto *e = reinterpret_cast<jpeg_failure *>(c->err);
        (*c->err->format_message)(c, e->message);
        std::longjmp(e->jump, 1);
    };
    std::vector<unsigned char> rows;
    std::size_t width = 0, height = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw image_error("media " + path + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char *>(bytes.data()),
                 static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_GRAYSCALE;
    jpeg_start_decompress(&cinfo);
    width = cinfo.output_width;
    height = cinfo.output_height;
    rows.resize(width * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rows.data() + static_cast<std::size_t>(cinfo.output_scanline) * width;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    gray_image out{width, height, {}};
    out.pixels.assign(rows.begin(), rows.end());
    return out;
}

} // namespace

gray_image decode_netpbm(const std::string &bytes, const std::string &name)
{
    auto fail = [&](const std::string &why) { return image_error("media " + name + ": " + why); };
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        std::size_t v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
            any = true;
        }
        if (!any)
            throw fail("malformed netpbm header");
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw fail("not a netpbm image");
    const char kind = bytes[1];
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        throw fail("unsupported netpbm variant");
    pos = 2;
    const auto w = number(), h = number(), maxval = number();
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
        throw fail("invalid netpbm dimensions");
    const bool colour = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    const std::size_t channels = colour ? 3 : 1;
    const double scale = 255.0 / static_cast<double>(maxval);

    gray_image img{w, h, std::vector<double>(w * h)};
    std::vector<double> sample(channels);
    if (binary)
        ++pos; /* single whitespace after maxval */
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    for (std::size_t i = 0; i < w * h; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            if (binary) {
                if (pos + bytes_per > bytes.size())
                    throw fail("truncated pixel data");
                std::size_t v = static_cast<unsigned char>(bytes[pos++]);
                if (bytes_per == 2)
                    v = (v << 8) | static_cast<unsigned char>(bytes[pos++]);
                sample[c] = static_cast<double>(v) * scale;
            } else {
                sample[c] = static_cast<double>(number()) * scale;
            }
        }
        img.pixels[i] = colour ? luma(sample[0], sample[1], sample[2]) : sample[0];
    }
    return img;
}

gray_image decode_image_file(const std::string &path)
{
    const auto bytes = read_all(path);
    if (bytes.size() >= 8 && static_cast<unsigned char>(bytes[0]) == 0x89 && bytes.compare(1, 3, "PNG") == 0)
        return decode_png(path);
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
        static_cast<unsigned char>(bytes[1]) == 0xD8)
        return decode_jpeg(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P')
        return decode_netpbm(bytes, path);
    throw image_error("media " + path + ": unrecognised image format");
}

gray_image resize_bilinear(const gray_image &img, std::size_t width, std::size_t height)
{
    gray_image out{width, height, std::vector<double>(width * height)};
    const double sx = static_cast<double>(img.width) / static_cast<double>(width);
    const double sy = static_cast<double>(img.height) / static_cast<double>(height);
    const double max_x = static_cast<double>(img.width - 1), max_y = static_cast<double>(img.height - 1);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(fy);
        const auto y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(fx);
            const auto x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = img.at(x0, y0) * (1 - wx) + img.at(x1, y0) * wx;
            const double bottom = img.at(x0, y1) * (1 - wx) + img.at(x1, y1) * wx;
            out.pixels[y * width + x] = top * (1 - wy) + bottom * wy;
        }
    }
    return out;
}

std::uint64_t phash(const gray_image &img)
{
    constexpr std::size_t N = 32, K = 8;
    if (img.width < 8 || img.height < 8)
        throw image_error("phash: image smaller than 8x8");
    const auto small = resize_bilinear(img, N, N);

    std::array<std::array<double, N>, K> basis{};
    for (std::size_t u = 0; u < K; ++u) {
        const double c = u == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
        for (std::size_t x = 0; x < N; ++x)
            basis[u][x] = c * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                       std::numbers::pi / (2.0 * N));
    }
    /* rows first: tmp[y][v] = sum_x f(x,y) basis[v][x] */
    std::array<std::array<double, K>, N> tmp{};
    for (std::size_t y = 0; y < N; ++y)
        for (std::size_t v = 0; v < K; ++v) {
            double acc = 0;
            for (std::size_t x = 0; x < N; ++x)
                acc += small.pixels[y * N + x] * basis[v][x];
            tmp[y][v] = acc;
        }
    std::array<std::int64_t, K * K> coeff{};
    for (std::size_t u = 0; u < K; ++u)
        for (std::size_t v = 0; v < K; ++v) {
            double acc = 0;
            for (std::size_t y = 0; y < N; ++y)
                acc += tmp[y][v] * basis[u][y];
            coeff[u * K + v] = std::llround(acc * 1e6);
        }

    std::array<std::int64_t, K * K - 1> ac{};
    std::copy(coeff.begin() + 1, coeff.end(), ac.begin());
    std::nth_element(ac.begin(), ac.begin() + ac.size() / 2, ac.end());
    const auto median = ac[ac.size() / 2];

    std::uint64_t h = 0;
    for (std::size_t i = 0; i < K * K; ++i)
        if (coeff[i] > median)
            h |= std::uint64_t{1} << i;
    return h;
}

int hamming_distance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

std::string fingerprint_to_hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool fingerprint_from_hex(const std::string &s, std::uint64_t &out)
{
    std::string_view v(s);
    if (v.substr(0, 2) == "h:")
        v.remove_prefix(2);
    if (v.size() != 16)
        return false;
    std::uint64_t h = 0;
    for (char c : v) {
        int d;
        if (c >= '0' && c <= '9')
            d = c - '0';
        else if (c >= 'a' && c <= 'f')
            d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F')
            d = c - 'A' + 10;
        else
            return false;
        h = (h << 4) | static_cast<std::uint64_t>(d);
    }
    out = h;
    return true;
}

} // namespace groupsei
