#include "ivg/render.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <fmt/format.h>
#include <zlib.h>

#include "ivg/error.hpp"
#include "ivg/rng.hpp"

namespace ivg {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kBackground{244, 241, 234};
constexpr Rgb kOutline{40, 40, 40};
constexpr Rgb kOverlay{230, 0, 126};

Rgb color_for(const std::string& name) {
  static const std::map<std::string, Rgb, std::less<>> known = {
      {"red", {214, 39, 40}},     {"blue", {31, 119, 180}},  {"green", {44, 160, 44}},
      {"yellow", {240, 200, 30}}, {"white", {250, 250, 250}}, {"black", {25, 25, 25}},
      {"orange", {255, 127, 14}}, {"purple", {148, 103, 189}}, {"brown", {140, 86, 75}},
      {"gray", {127, 127, 127}},  {"pink", {227, 119, 194}}};
  if (auto it = known.find(name); it != known.end()) return it->second;
  const std::uint64_t h = stable_hash(0, name);
  return Rgb{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8),
             static_cast<std::uint8_t>(h >> 16)};
}

std::string hex(Rgb c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct PixelRect {
  int x0, y0, x1, y1;
};

PixelRect to_pixels(const BBox& b, int w, int h) {
  return {to_pixel(b.x_min(), w), to_pixel(b.y_min(), h), to_pixel(b.x_max(), w),
          to_pixel(b.y_max(), h)};
}

std::string render_svg(const Scene& scene, std::span<const Overlay> overlays) {
  const int w = scene.pixel_width;
  const int h = scene.pixel_height;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      w, h);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", w, h,
                     hex(kBackground));
  for (const auto& o : scene.objects) {
    const PixelRect r = to_pixels(o.bbox, w, h);
    const std::string fill = hex(color_for(o.color));
    if (o.category == "ball" || o.category == "plate") {
      out += fmt::format(
          "<ellipse class=\"object\" data-id=\"{}\" cx=\"{:.1f}\" cy=\"{:.1f}\" rx=\"{:.1f}\" "
          "ry=\"{:.1f}\" fill=\"{}\" stroke=\"{}\"/>\n",
          o.id, 0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1), 0.5 * (r.x1 - r.x0),
          0.5 * (r.y1 - r.y0), fill, hex(kOutline));
    } else {
      out += fmt::format(
          "<rect class=\"object\" data-id=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
          "rx=\"4\" fill=\"{}\" stroke=\"{}\"/>\n",
          o.id, r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0, fill, hex(kOutline));
    }
  }
  for (const auto& ov : overlays) {
    const PixelRect r = to_pixels(ov.box, w, h);
    out += fmt::format(
        "<rect class=\"overlay\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
        "stroke=\"{}\" stroke-width=\"3\"/>\n",
        r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0, hex(kOverlay));
    out += fmt::format(
        "<text class=\"overlay-label\" x=\"{}\" y=\"{}\" font-family=\"monospace\" "
        "font-size=\"14\" fill=\"{}\">{}</text>\n",
        r.x0 + 3, r.y0 + 15, hex(kOverlay), xml_escape(ov.label));
  }
  out += "</svg>\n";
  return out;
}

// 5x7 bitmap glyphs for overlay labels, rows top to bottom.
const std::map<char, std::string_view>& glyphs() {
  static const std::map<char, std::string_view> table = {
      {'A', "01110100011000111111100011000110001"}, {'B', "11110100011000111110100011000111110"},
      {'C', "01110100011000010000100001000101110"}, {'D', "11100100101000110001100011001011100"},
      {'E', "11111100001000011110100001000011111"}, {'F', "11111100001000011110100001000010000"},
      {'G', "01110100011000010111100011000101111"}, {'H', "10001100011000111111100011000110001"},
      {'I', "01110001000010000100001000010001110"}, {'J', "00111000100001000010000101001001100"},
      {'K', "10001100101010011000101001001010001"}, {'L', "10000100001000010000100001000011111"},
      {'M', "10001110111010110101100011000110001"}, {'N', "10001100011100110101100111000110001"},
      {'O', "01110100011000110001100011000101110"}, {'P', "11110100011000111110100001000010000"},
      {'Q', "01110100011000110001101011001001101"}, {'R', "11110100011000111110101001001010001"},
      {'S', "01111100001000001110000010000111110"}, {'T', "11111001000010000100001000010000100"},
      {'U', "10001100011000110001100011000101110"}, {'V', "10001100011000110001100010101000100"},
      {'W', "10001100011000110101101011010101010"}, {'X', "10001100010101000100010101000110001"},
      {'Y', "10001100010101000100001000010000100"}, {'Z', "11111000010001000100010001000011111"},
      {'0', "01110100011001110101110011000101110"}, {'1', "00100011000010000100001000010001110"},
      {'2', "01110100010000100010001000100011111"}, {'3', "11111000100010000010000011000101110"},
      {'4', "00010001100101010010111110001000010"}, {'5', "11111100001111000001000011000101110"},
      {'6', "00110010001000011110100011000101110"}, {'7', "11111000010001000100010000100001000"},
      {'8', "01110100011000101110100011000101110"}, {'9', "01110100011000101111000010001001100"},
      {'-', "00000000000000011111000000000000000"}, {'.', "00000000000000000000000000110001100"},
      {':', "00000011000110000000011000110000000"}};
  return table;
}

class Raster {
 public:
  Raster(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h, kBackground) {}

  void set(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) px_[static_cast<std::size_t>(y) * w_ + x] = c;
  }

  void fill_rect(const PixelRect& r, Rgb c) {
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x) set(x, y, c);
  }

  void fill_ellipse(const PixelRect& r, Rgb c) {
    const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
    const double rx = 0.5 * (r.x1 - r.x0), ry = 0.5 * (r.y1 - r.y0);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) set(x, y, c);
      }
    }
  }

  void outline(const PixelRect& r, int thickness, Rgb c) {
    for (int t = 0; t < thickness; ++t) {
      for (int x = r.x0; x < r.x1; ++x) {
        set(x, r.y0 + t, c);
        set(x, r.y1 - 1 - t, c);
      }
      for (int y = r.y0; y < r.y1; ++y) {
        set(r.x0 + t, y, c);
        set(r.x1 - 1 - t, y, c);
      }
    }
  }

  void text(int x, int y, std::string_view s, Rgb c) {
    for (char ch : s) {
      const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (auto it = glyphs().find(up); it != glyphs().end()) {
        for (int row = 0; row < 7; ++row)
          for (int col = 0; col < 5; ++col)
            if (it->second[row * 5 + col] == '1') set(x + col, y + row, c);
      }
      x += 6;
    }
  }

  std::string encode_png() const;

 private:
  int w_, h_;
  std::vector<Rgb> px_;
};

void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>(v >> 24);
  out += static_cast<char>(v >> 16);
  out += static_cast<char>(v >> 8);
  out += static_cast<char>(v);
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}

std::string Raster::encode_png() const {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(h_) * (1 + 3 * w_));
  for (int y = 0; y < h_; ++y) {
    raw += '\0';
    for (int x = 0; x < w_; ++x) {
      const Rgb& c = px_[static_cast<std::size_t>(y) * w_ + x];
      raw += static_cast<char>(c.r);
      raw += static_cast<char>(c.g);
      raw += static_cast<char>(c.b);
    }
  }
  uLongf len = compressBound(raw.size());
  std::string compressed(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &len,
                reinterpret_cast<const Bytef*>(raw.data()), raw.size(), 9) != Z_OK) {
    throw Error("png: zlib compression failed");
  }
  compressed.resize(len);

  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w_));
  put_u32(ihdr, static_cast<std::uint32_t>(h_));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB

  std::string png("\x89PNG\r\n\x1a\n", 8);
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", compressed);
  put_chunk(png, "IEND", "");
  return png;
}

std::string render_png(const Scene& scene, std::span<const Overlay> overlays) {
  Raster raster(scene.pixel_width, scene.pixel_height);
  for (const auto& o : scene.objects) {
    const PixelRect r = to_pixels(o.bbox, scene.pixel_width, scene.pixel_height);
    if (o.category == "ball" || o.category == "plate") {
      raster.fill_ellipse(r, color_for(o.color));
    } else {
      raster.fill_rect(r, color_for(o.color));
      raster.outline(r, 1, kOutline);
    }
  }
  for (const auto& ov : overlays) {
    const PixelRect r = to_pixels(ov.box, scene.pixel_width, scene.pixel_height);
    raster.outline(r, 3, kOverlay);
    raster.text(r.x0 + 5, r.y0 + 5, ov.label, kOverlay);
  }
  return raster.encode_png();
}

}  // namespace

int to_pixel(double fraction, int extent) {
  return static_cast<int>(std::lround(fraction * extent));
}

std::string render_scene(const Scene& scene, std::string_view format,
                         std::span<const Overlay> overlays) {
  if (scene.pixel_width <= 0 || scene.pixel_height <= 0) {
    throw ValidationError("render: scene has non-positive pixel size");
  }
  if (format == "svg") return render_svg(scene, overlays);
  if (format == "png") return render_png(scene, overlays);
  throw ValidationError(fmt::format("render: unsupported format '{}' (use svg or png)", format));
}

}  // namespace ivg
