#include "scod/image_io.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"

#include <cctype>
#include <string_view>

namespace scod {

namespace {

std::vector<std::uint8_t> header(std::string_view magic, int w, int h) {
  const std::string text = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return {text.begin(), text.end()};
}

struct Netpbm {
  int width;
  int height;
  std::span<const std::uint8_t> pixels;
};

Netpbm parse_netpbm(std::span<const std::uint8_t> bytes, std::string_view magic, int channels) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start || v > 1 << 20) throw Error(ErrorKind::Format, "bad netpbm header");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw Error(ErrorKind::Format, "expected " + std::string(magic) + " image");
  }
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw Error(ErrorKind::Format, "only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(ErrorKind::Format, "bad netpbm header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos != need) throw Error(ErrorKind::Format, "netpbm payload size mismatch");
  return {w, h, bytes.subspan(pos, need)};
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  auto out = header("P6", img.width(), img.height());
  out.insert(out.end(), img.data.data(), img.data.data() + img.data.size());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const Netpbm p = parse_netpbm(bytes, "P6", 3);
  RgbImage img(p.width, p.height);
  std::copy(p.pixels.begin(), p.pixels.end(), img.data.data());
  return img;
}

std::vector<std::uint8_t> encode_pgm(const Image<std::uint8_t>& gray) {
  auto out = header("P5", static_cast<int>(gray.cols()), static_cast<int>(gray.rows()));
  out.insert(out.end(), gray.data(), gray.data() + gray.size());
  return out;
}

Image<std::uint8_t> decode_pgm(std::span<const std::uint8_t> bytes) {
  const Netpbm p = parse_netpbm(bytes, "P5", 1);
  Image<std::uint8_t> gray(p.height, p.width);
  std::copy(p.pixels.begin(), p.pixels.end(), gray.data());
  return gray;
}

std::vector<std::uint8_t> encode_mask_pgm(const Mask& mask) {
  return encode_pgm((mask != 0).select(Image<std::uint8_t>::Constant(mask.rows(), mask.cols(), 255),
                                       Image<std::uint8_t>::Zero(mask.rows(), mask.cols())));
}

Mask decode_mask_pgm(std::span<const std::uint8_t> bytes) {
  const Image<std::uint8_t> gray = decode_pgm(bytes);
  return (gray != 0).cast<std::uint8_t>();
}

void write_ppm(const std::string& path, const RgbImage& img) { write_file(path, encode_ppm(img)); }
void write_mask_pgm(const std::string& path, const Mask& mask) { write_file(path, encode_mask_pgm(mask)); }

}  // namespace scod
