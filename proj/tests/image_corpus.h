#pragma once

#include "groupsei/phash.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace corpus {

/* ten structured 96x72 rasters with intensities kept in [20, 200] */
inline std::vector<groupsei::gray_image> structured_images()
{
    constexpr std::size_t w = 96, h = 72;
    std::vector<groupsei::gray_image> out;
    for (int k = 0; k < 10; ++k) {
        groupsei::gray_image img{w, h, std::vector<double>(w * h)};
        std::mt19937_64 gen(static_cast<std::uint64_t>(k) + 100);
        std::uniform_real_distribution<double> u(0, 1);
        const double fx = 1 + k % 4, fy = 1 + k / 4, phase = u(gen) * 2 * std::numbers::pi;
        const double cx = u(gen) * w, cy = u(gen) * h, r = 10 + u(gen) * 20;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double xs = static_cast<double>(x) / w, ys = static_cast<double>(y) / h;
                double v = 110 + 50 * std::sin(2 * std::numbers::pi * (fx * xs + fy * ys) + phase);
                if (k % 2 == 0)
                    v += 30 * (xs - ys);
                const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
                if (dx * dx + dy * dy < r * r)
                    v = k % 3 == 0 ? 40 : 180;
                img.pixels[y * w + x] = std::clamp(v, 20.0, 200.0);
            }
        out.push_back(std::move(img));
    }
    return out;
}

inline groupsei::gray_image brighten(const groupsei::gray_image &img, double factor)
{
    auto out = img;
    for (auto &p : out.pixels)
        p = std::min(255.0, p * factor);
    return out;
}

inline groupsei::gray_image noise(std::size_t w, std::size_t h, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> pick(0, 255);
    groupsei::gray_image img{w, h, std::vector<double>(w * h)};
    for (auto &p : img.pixels)
        p = pick(gen);
    return img;
}

} // namespace corpus
