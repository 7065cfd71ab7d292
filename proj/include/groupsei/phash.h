#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupsei {

/* Row-major grayscale raster, intensities in [0, 255]. */
struct gray_image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

class image_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* Netpbm (P2, P3, P5, P6), PNG and JPEG; colour is converted with
 * ITU-R BT.601 luma weights. Throws image_error naming the file. */
gray_image decode_image_file(const std::string &path);
gray_image decode_netpbm(const std::string &bytes, const std::string &name);

/* Bilinear resample with pixel-centre alignment. */
gray_image resize_bilinear(const gray_image &img, std::size_t width, std::size_t height);

/* DCT perceptual hash: 32x32 bilinear downscale, orthonormal 2-D DCT-II,
 * the 8x8 lowest-frequency block quantised to 1e-6, bit (8u+v) set iff
 * coefficient (u,v) exceeds the median of the 63 non-DC coefficients.
 * Requires both dimensions >= 8. */
std::uint64_t phash(const gray_image &img);

int hamming_distance(std::uint64_t a, std::uint64_t b);

std::string fingerprint_to_hex(std::uint64_t h);
/* accepts 16 hex digits, optionally prefixed `h:` */
bool fingerprint_from_hex(const std::string &s, std::uint64_t &out);

} // namespace groupsei
