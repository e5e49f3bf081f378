#include "rwl1df/video.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace rwl1df {

void VideoConfig::validate() const {
  if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0) {
    throw InvalidConfig("video: frame size must be positive and even");
  }
  if (!is_power_of_two(crop)) throw InvalidConfig("video: crop size must be a power of two");
  if (crop > width || crop > height) throw InvalidConfig("video: crop larger than frame");
  if (frames < 1) throw InvalidConfig("video: frames must be >= 1");
  if (!(m_over_n > 0.0 && m_over_n <= 1.0)) throw InvalidConfig("video: need 0 < m_over_n <= 1");
  if (noise_var < 0.0) throw InvalidConfig("video: noise variance must be >= 0");
}

std::vector<Matrix> read_yuv_luma(const VideoConfig& cfg) {
  cfg.validate();
  std::ifstream in(cfg.yuv_path, std::ios::binary);
  if (!in) throw IngestionError("video: cannot open " + cfg.yuv_path);
  const auto file_size = static_cast<Index>(std::filesystem::file_size(cfg.yuv_path));
  const Index frame_bytes = cfg.frame_bytes();
  const Index needed = frame_bytes * cfg.frames;
  if (file_size < needed) {
    const Index whole = file_size / frame_bytes;
    throw IngestionError("video: " + cfg.yuv_path + " is truncated: frame " +
                         std::to_string(whole) + " would start at byte offset " +
                         std::to_string(whole * frame_bytes) + " and needs " +
                         std::to_string(frame_bytes) + " bytes, but the file ends at byte " +
                         std::to_string(file_size) + " (" + std::to_string(needed) +
                         " bytes required for " + std::to_string(cfg.frames) + " frames)");
  }

  const Index top = (cfg.height - cfg.crop) / 2;
  const Index left = (cfg.width - cfg.crop) / 2;
  std::vector<unsigned char> luma(static_cast<std::size_t>(cfg.width * cfg.height));
  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(cfg.frames));
  for (int f = 0; f < cfg.frames; ++f) {
    in.seekg(static_cast<std::streamoff>(f) * frame_bytes);
    in.read(reinterpret_cast<char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
    if (!in) {
      throw IngestionError("video: read failed at byte offset " +
                           std::to_string(static_cast<Index>(f) * frame_bytes));
    }
    Matrix m(cfg.crop, cfg.crop);
    for (Index r = 0; r < cfg.crop; ++r) {
      for (Index c = 0; c < cfg.crop; ++c) {
        m(r, c) = luma[static_cast<std::size_t>((top + r) * cfg.width + left + c)] / 255.0;
      }
    }
    frames.push_back(std::move(m));
  }
  return frames;
}

void write_panning_yuv(const std::string& path, const std::vector<unsigned char>& source,
                       Index source_width, Index source_height, Index width, Index height,
                       const std::vector<PanOffset>& offsets) {
  if (static_cast<Index>(source.size()) != source_width * source_height) {
    throw InvalidDimension("panning video: source size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("panning video: cannot write " + path);
  const std::vector<char> chroma(static_cast<std::size_t>(2 * (width / 2) * (height / 2)),
                                 static_cast<char>(128));
  std::vector<char> luma(static_cast<std::size_t>(width * height));
  for (const PanOffset& o : offsets) {
    if (o.dx < 0 || o.dy < 0 || o.dx + width > source_width || o.dy + height > source_height) {
      throw InvalidDimension("panning video: window leaves the source image");
    }
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) {
        luma[static_cast<std::size_t>(r * width + c)] =
            static_cast<char>(source[static_cast<std::size_t>((o.dy + r) * source_width + o.dx + c)]);
      }
    }
    out.write(luma.data(), static_cast<std::streamsize>(luma.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
}

std::vector<PanOffset> test_pan_offsets(int frames, Index max_dx, Index max_dy) {
  if (frames < 1 || max_dx < 0 || max_dy < 0) throw InvalidDimension("pan offsets: bad range");
  constexpr int kHold = 6;
  constexpr Index kJump = 2;
  std::vector<PanOffset> out;
  PanOffset o{max_dx / 2, max_dy / 2};
  for (int t = 0; t < frames; ++t) {
    if (t > 0 && t % kHold == 0) {
      o.dx = std::min(max_dx, o.dx + kJump);
      if ((t / kHold) % 2 == 0) o.dy = std::min(max_dy, o.dy + kJump / 2);
    }
    out.push_back(o);
  }
  return out;
}

std::vector<unsigned char> read_gray_image(const std::string& path, Index width, Index height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("gray image: cannot open " + path);
  std::vector<unsigned char> data(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw IngestionError("gray image: " + path + " ends at byte " +
                         std::to_string(in.gcount()) + ", expected " +
                         std::to_string(data.size()));
  }
  return data;
}

}  // namespace rwl1df
