#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lsm/input_map.hpp"
#include "lsm/types.hpp"

namespace lsm {

struct Event {
  std::uint64_t t = 0;  // microseconds
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint8_t p = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::optional<std::uint32_t> label;
  std::vector<Event> events;

  /// Sorted timestamps, coordinates in range, polarity in {0, 1}.
  void validate() const;
};

/// T frames of channels x height x width counts. Row t of `data` is frame t
/// flattened channel-major, then row-major: (c * height + y) * width + x.
struct FrameSequence {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::uint64_t time_window = 0;
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data;

  int steps() const { return static_cast<int>(data.rows()); }
  int frame_size() const { return channels * height * width; }
  double& at(int t, int c, int y, int x) { return data(t, (c * height + y) * width + x); }
  double at(int t, int c, int y, int x) const { return data(t, (c * height + y) * width + x); }
};

enum class TimeAnchor { FirstEvent, Zero };

struct BinOptions {
  std::uint64_t time_window = 1000;
  bool merge_polarities = false;
  TimeAnchor anchor = TimeAnchor::FirstEvent;
  /// 0 keeps floor((t_last - t_origin) / time_window) + 1 frames; otherwise
  /// pads with empty frames or drops events past the last frame.
  int num_frames = 0;
};

/// Event at time t lands in frame floor((t - origin) / time_window), channel = polarity.
FrameSequence bin_events(const EventStream& stream, const BinOptions& options);
FrameSequence bin_events(const EventStream& stream, std::uint64_t time_window);

/// Count-preserving sum pooling over factor x factor blocks.
FrameSequence downscale(const FrameSequence& frames, int factor);

struct GaborSpec {
  int orientations = 6;
  std::vector<double> wavelengths{2.0, 4.0, 8.0};
  int kernel_size = 7;
  double sigma_per_wavelength = 0.5;
  double aspect_ratio = 1.0;
  double phase = 0.0;
  bool zero_mean = true;
  /// Sum input channels before filtering (output has one channel per kernel).
  bool merge_channels = true;

  int bank_size() const { return orientations * static_cast<int>(wavelengths.size()); }
};

/// Kernels ordered wavelength-major: index = w * orientations + o, with
/// orientation o at o * 180 / orientations degrees.
std::vector<Eigen::MatrixXd> gabor_kernels(const GaborSpec& spec);

/// Same-size correlation with zero padding, then rectification at 0.
FrameSequence gabor_bank(const FrameSequence& frames, const GaborSpec& spec);

struct PresentationSpec {
  double input_scale = 1.0;
};

/// Injects one frame per simulation step through an input map. Only
/// nonzero frame entries are visited.
class InputDriver {
 public:
  InputDriver(const InputMap& map, const PresentationSpec& presentation);

  int n_inputs() const { return static_cast<int>(weights_.cols()); }
  int n_targets() const { return static_cast<int>(weights_.rows()); }

  /// Adds drive for frame t of `frames` into `out` (length n_targets).
  template <typename Derived>
  void accumulate(const FrameSequence& frames, int t, Eigen::MatrixBase<Derived>& out) const {
    const auto row = frames.data.row(t);
    for (Eigen::Index in = 0; in < row.size(); ++in) {
      const double count = row[in];
      if (count == 0) continue;
      const double a = count * scale_;
      for (SparseWeights<double>::InnerIterator it(weights_, in); it; ++it) out[it.row()] += a * it.value();
    }
  }

 private:
  SparseWeights<double> weights_;
  double scale_;
};

/// Full drive matrix, one column per step (n_targets x T).
Eigen::MatrixXd frames_to_spike_drive(const FrameSequence& frames, const InputMap& map,
                                      const PresentationSpec& presentation);

// Binary event files: little-endian, magic "EVS1", u32 width, u32 height,
// u32 label (0xFFFFFFFF = none), u64 count, then count records of
// (u64 t, u16 x, u16 y, u8 p).
inline constexpr std::uint32_t kNoLabel = 0xFFFFFFFFu;

void write_events(std::ostream& os, const EventStream& stream);
EventStream read_events(std::istream& is);
void write_events(const std::filesystem::path& path, const EventStream& stream);
EventStream read_events(const std::filesystem::path& path);

/// CSV interchange `t,x,y,p`; an optional header line is skipped on read.
void write_events_csv(std::ostream& os, const EventStream& stream);
EventStream read_events_csv(std::istream& is, std::uint32_t width, std::uint32_t height,
                            std::optional<std::uint32_t> label);

}  // namespace lsm
