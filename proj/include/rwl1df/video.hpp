#pragma once

#include "rwl1df/core.hpp"

#include <string>
#include <vector>

namespace rwl1df {

/// Planar YUV 4:2:0 source and the square crop used for recovery.
struct VideoConfig {
  std::string yuv_path;
  Index width = 352;
  Index height = 288;
  Index crop = 64;
  int frames = 30;
  double m_over_n = 0.27;
  int taps = 4;
  int levels = 3;
  double noise_var = 0.0;

  void validate() const;
  Index frame_bytes() const { return width * height + 2 * ((width / 2) * (height / 2)); }
};

/// Luma plane of the first cfg.frames frames, center-cropped to
/// cfg.crop x cfg.crop and scaled to [0, 1].
std::vector<Matrix> read_yuv_luma(const VideoConfig& cfg);

/// Integer pan offsets for frame t of a rendered test sequence.
struct PanOffset {
  Index dx = 0;
  Index dy = 0;
};

/// Writes a YUV 4:2:0 sequence whose luma is a width x height window
/// sliding over a grayscale source image (chroma set to 128). Used to build
/// natural-image test sequences with controlled motion.
void write_panning_yuv(const std::string& path, const std::vector<unsigned char>& source,
                       Index source_width, Index source_height, Index width, Index height,
                       const std::vector<PanOffset>& offsets);

/// Motion schedule for rendered test sequences: the window starts centred,
/// holds still, and jumps by a few pixels every few frames.
std::vector<PanOffset> test_pan_offsets(int frames, Index max_dx, Index max_dy);

/// Reads a raw 8-bit grayscale image of known size.
std::vector<unsigned char> read_gray_image(const std::string& path, Index width, Index height);

}  // namespace rwl1df
