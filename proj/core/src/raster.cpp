#include "stainpipe/raster.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "stainpipe/error.hpp"

namespace stainpipe {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) raise(errc::io_error, "cannot open '" + path + "'");
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  (void)png;
  raise(errc::format_error, std::string("libpng: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

class PngReader final : public RasterReader {
public:
  explicit PngReader(const std::string& path) : file_(open_file(path, "rb")) {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                  png_warn_fn);
    if (!png_) raise(errc::io_error, "png_create_read_struct failed");
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
    png_read_info(png_, info_);

    const int bit_depth = png_get_bit_depth(png_, info_);
    const int color_type = png_get_color_type(png_, info_);
    if (bit_depth == 16)
      raise(errc::format_error, "16-bit PNG is not supported: " + path);
    if (bit_depth < 8) png_set_expand(png_);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_);
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png_);
    png_set_strip_alpha(png_);
    png_read_update_info(png_, info_);

    width_ = static_cast<int>(png_get_image_width(png_, info_));
    height_ = static_cast<int>(png_get_image_height(png_, info_));
    if (png_get_channels(png_, info_) != 3)
      raise(errc::format_error, "unsupported PNG color model: " + path);

    png_uint_32 res_x = 0, res_y = 0;
    int unit = 0;
    if (png_get_pHYs(png_, info_, &res_x, &res_y, &unit) &&
        unit == PNG_RESOLUTION_METER && res_x > 0) {
      mpp_ = 1e6 / static_cast<double>(res_x);
    }

    interlaced_ = png_get_interlace_type(png_, info_) != PNG_INTERLACE_NONE;
    if (interlaced_) {
      // Interlaced files cannot be streamed row-wise; buffer them whole.
      buffer_.resize(static_cast<std::size_t>(width_) * height_ * 3);
      std::vector<png_bytep> rows(height_);
      for (int y = 0; y < height_; ++y)
        rows[y] = buffer_.data() + static_cast<std::size_t>(y) * width_ * 3;
      png_set_interlace_handling(png_);
      png_read_image(png_, rows.data());
    }
  }

  ~PngReader() override {
    if (png_) png_destroy_read_struct(&png_, &info_, nullptr);
  }

  void read_rows(std::uint8_t* dst, int count) override {
    if (cursor_ + count > height_)
      raise(errc::io_error, "read past end of PNG");
    const std::size_t row_bytes = static_cast<std::size_t>(width_) * 3;
    if (interlaced_) {
      std::memcpy(dst, buffer_.data() + static_cast<std::size_t>(cursor_) * row_bytes,
                  static_cast<std::size_t>(count) * row_bytes);
    } else {
      for (int i = 0; i < count; ++i)
        png_read_row(png_, dst + static_cast<std::size_t>(i) * row_bytes, nullptr);
    }
    cursor_ += count;
  }

private:
  FilePtr file_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  bool interlaced_ = false;
  int cursor_ = 0;
  std::vector<std::uint8_t> buffer_;
};

// Minimal baseline TIFF reader: uncompressed strips, 8-bit gray/RGB/RGBA,
// chunky planar layout. Anything else raises a format error.
class TiffReader final : public RasterReader {
public:
  explicit TiffReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open '" + path + "'");
    data_.assign(std::istreambuf_iterator<char>(in), {});
    if (data_.size() < 8) raise(errc::format_error, "truncated TIFF: " + path);

    if (data_[0] == 'I' && data_[1] == 'I') {
      little_endian_ = true;
    } else if (data_[0] == 'M' && data_[1] == 'M') {
      little_endian_ = false;
    } else {
      raise(errc::format_error, "bad TIFF byte-order mark: " + path);
    }
    if (u16(2) != 42) raise(errc::format_error, "bad TIFF magic: " + path);

    parse_ifd(u32(4));
  }

  void read_rows(std::uint8_t* dst, int count) override {
    if (cursor_ + count > height_)
      raise(errc::io_error, "read past end of TIFF");
    for (int i = 0; i < count; ++i) copy_row(cursor_ + i, dst + std::size_t(i) * width_ * 3);
    cursor_ += count;
  }

private:
  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    return little_endian_
               ? std::uint16_t(data_[off] | (data_[off + 1] << 8))
               : std::uint16_t((data_[off] << 8) | data_[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    if (little_endian_)
      return std::uint32_t(data_[off]) | (std::uint32_t(data_[off + 1]) << 8) |
             (std::uint32_t(data_[off + 2]) << 16) |
             (std::uint32_t(data_[off + 3]) << 24);
    return (std::uint32_t(data_[off]) << 24) |
           (std::uint32_t(data_[off + 1]) << 16) |
           (std::uint32_t(data_[off + 2]) << 8) | std::uint32_t(data_[off + 3]);
  }
  void check(std::size_t off, std::size_t n) const {
    if (off + n > data_.size())
      raise(errc::format_error, "truncated TIFF: " + path_);
  }

  struct Entry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_off = 0;  // offset of the value field itself
  };

  std::uint32_t entry_value(const Entry& e, std::uint32_t index = 0) const {
    // SHORT(3) or LONG(4); values fit inline when total size <= 4 bytes
    const std::size_t elem = e.type == 3 ? 2 : 4;
    std::size_t base = e.value_off;
    if (elem * e.count > 4) base = u32(e.value_off);
    const std::size_t off = base + index * elem;
    return e.type == 3 ? u32_from_u16(off) : u32(off);
  }
  std::uint32_t u32_from_u16(std::size_t off) const { return u16(off); }

  double rational(const Entry& e) const {
    const std::size_t base = u32(e.value_off);
    const std::uint32_t num = u32(base);
    const std::uint32_t den = u32(base + 4);
    return den == 0 ? 0.0 : double(num) / double(den);
  }

  void parse_ifd(std::size_t ifd_off) {
    const std::uint16_t n = u16(ifd_off);
    std::uint32_t compression = 1, photometric = 2, planar = 1;
    std::uint32_t rows_per_strip = 0xFFFFFFFFu;
    std::uint16_t bits = 8;
    double res_x = 0.0;
    std::uint32_t res_unit = 2;
    Entry strip_offsets{}, strip_counts{};
    bool have_offsets = false;

    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e_off = ifd_off + 2 + std::size_t(i) * 12;
      const std::uint16_t tag = u16(e_off);
      Entry e{u16(e_off + 2), u32(e_off + 4), e_off + 8};
      switch (tag) {
        case 256: width_ = static_cast<int>(entry_value(e)); break;
        case 257: height_ = static_cast<int>(entry_value(e)); break;
        case 258: bits = static_cast<std::uint16_t>(entry_value(e)); break;
        case 259: compression = entry_value(e); break;
        case 262: photometric = entry_value(e); break;
        case 273: strip_offsets = e; have_offsets = true; break;
        case 277: samples_ = static_cast<int>(entry_value(e)); break;
        case 278: rows_per_strip = entry_value(e); break;
        case 279: strip_counts = e; break;
        case 282: res_x = rational(e); break;
        case 284: planar = entry_value(e); break;
        case 296: res_unit = entry_value(e); break;
        default: break;
      }
    }

    if (width_ <= 0 || height_ <= 0 || !have_offsets)
      raise(errc::format_error, "TIFF missing required tags: " + path_);
    if (compression != 1)
      raise(errc::format_error,
            "only uncompressed baseline TIFF is supported: " + path_);
    if (bits != 8)
      raise(errc::format_error,
            std::to_string(bits) + "-bit TIFF is not supported: " + path_);
    if (planar != 1)
      raise(errc::format_error, "planar TIFF is not supported: " + path_);
    if (photometric > 2)
      raise(errc::format_error, "unsupported TIFF color model: " + path_);
    if (samples_ != 1 && samples_ != 3 && samples_ != 4)
      raise(errc::format_error, "unsupported TIFF sample count: " + path_);

    if (res_x > 0.0) {
      // unit 2 = inch, 3 = centimetre
      if (res_unit == 2) mpp_ = 25400.0 / res_x;
      if (res_unit == 3) mpp_ = 10000.0 / res_x;
    }

    rows_per_strip_ = static_cast<int>(
        std::min<std::uint32_t>(rows_per_strip, std::uint32_t(height_)));
    const int strips = (height_ + rows_per_strip_ - 1) / rows_per_strip_;
    strip_off_.resize(strips);
    for (int s = 0; s < strips; ++s)
      strip_off_[s] = entry_value(strip_offsets, s);
    (void)strip_counts;
  }

  void copy_row(int y, std::uint8_t* dst) const {
    const int strip = y / rows_per_strip_;
    const int in_strip = y % rows_per_strip_;
    const std::size_t row_bytes = std::size_t(width_) * samples_;
    const std::size_t src = strip_off_[strip] + std::size_t(in_strip) * row_bytes;
    check(src, row_bytes);
    const std::uint8_t* p = data_.data() + src;
    if (samples_ == 1) {
      for (int x = 0; x < width_; ++x) {
        dst[x * 3] = dst[x * 3 + 1] = dst[x * 3 + 2] = p[x];
      }
    } else {
      for (int x = 0; x < width_; ++x) {
        dst[x * 3] = p[x * samples_];
        dst[x * 3 + 1] = p[x * samples_ + 1];
        dst[x * 3 + 2] = p[x * samples_ + 2];
      }
    }
  }

  std::string path_;
  std::vector<std::uint8_t> data_;
  bool little_endian_ = true;
  int samples_ = 1;
  int rows_per_strip_ = 1;
  std::vector<std::size_t> strip_off_;
  int cursor_ = 0;
};

}  // namespace

std::unique_ptr<RasterReader> open_raster(const std::string& path) {
  std::uint8_t magic[4] = {0, 0, 0, 0};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open '" + path + "'");
    in.read(reinterpret_cast<char*>(magic), 4);
  }
  if (magic[0] == 0x89 && magic[1] == 'P') return std::make_unique<PngReader>(path);
  if ((magic[0] == 'I' && magic[1] == 'I') || (magic[0] == 'M' && magic[1] == 'M'))
    return std::make_unique<TiffReader>(path);
  raise(errc::format_error, "unrecognized raster format: " + path);
}

RasterSource probe_raster(const std::string& path,
                          std::optional<double> mpp_override) {
  auto reader = open_raster(path);
  RasterSource src;
  src.path = path;
  src.width = reader->width();
  src.height = reader->height();
  src.mpp = mpp_override.value_or(reader->mpp().value_or(0.0));
  return src;
}

CoreImage load_core_image(const std::string& path, std::optional<double> mpp) {
  auto reader = open_raster(path);
  CoreImage img;
  img.width = reader->width();
  img.height = reader->height();
  img.pixels.resize(img.pixel_count() * 3);
  reader->read_rows(img.pixels.data(), img.height);
  img.mpp = mpp.value_or(reader->mpp().value_or(0.0));
  return img;
}

void save_png(const CoreImage& image, const std::string& path) {
  if (image.empty()) raise(errc::range_error, "cannot save an empty image");
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  if (!png) raise(errc::io_error, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  if (image.mpp > 0.0) {
    const auto ppm = static_cast<png_uint_32>(round_half_even(1e6 / image.mpp));
    png_set_pHYs(png, info, ppm, ppm, PNG_RESOLUTION_METER);
  }
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           &image.pixels[image.offset(0, y, 0)]));
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

}  // namespace stainpipe
