#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tracescope {

/// 8-bit interleaved RGB raster, row-major, row 0 at the top.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, std::uint8_t fill = 0);
    RgbImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t& at(int x, int y, int c) noexcept {
        return pixels_[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                        static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
    }
    std::uint8_t at(int x, int y, int c) const noexcept {
        return pixels_[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                        static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
        at(x, y, 0) = r;
        at(x, y, 1) = g;
        at(x, y, 2) = b;
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// PNG encoding with fixed encoder settings (no timestamps), so identical
/// images always produce identical bytes.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_png(const std::filesystem::path& path);

/// Copies `src` into `dst` with its top-left corner at (x0, y0), clipping.
void blit(RgbImage& dst, const RgbImage& src, int x0, int y0);
void fill_rect(RgbImage& img, int x0, int y0, int w, int h, std::uint8_t r, std::uint8_t g,
               std::uint8_t b);
/// Draws decimal digits and '.' with a 3x5 bitmap font scaled by `scale`.
void draw_text(RgbImage& img, int x0, int y0, std::string_view text, int scale, std::uint8_t r,
               std::uint8_t g, std::uint8_t b);

}  // namespace tracescope
