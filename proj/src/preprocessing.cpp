#include "lsm/preprocessing.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace lsm {

void EventStream::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && e.t < events[i - 1].t) throw DatasetError("EventStream: events not sorted by time");
    if (e.x >= width || e.y >= height) throw DatasetError("EventStream: event coordinate outside sensor");
    if (e.p > 1) throw DatasetError("EventStream: polarity must be 0 or 1");
  }
}

FrameSequence bin_events(const EventStream& stream, const BinOptions& options) {
  if (options.time_window == 0) throw ConfigError("bin_events: time_window must be positive");
  if (options.num_frames < 0) throw ConfigError("bin_events: num_frames must be >= 0");
  stream.validate();

  FrameSequence out;
  out.channels = options.merge_polarities ? 1 : 2;
  out.height = static_cast<int>(stream.height);
  out.width = static_cast<int>(stream.width);
  out.time_window = options.time_window;

  const std::uint64_t origin =
      options.anchor == TimeAnchor::Zero || stream.events.empty() ? 0 : stream.events.front().t;
  int steps = options.num_frames;
  if (steps == 0 && !stream.events.empty())
    steps = static_cast<int>((stream.events.back().t - origin) / options.time_window) + 1;

  out.data.setZero(steps, out.frame_size());
  for (const auto& e : stream.events) {
    const auto t = (e.t - origin) / options.time_window;
    if (t >= static_cast<std::uint64_t>(steps)) break;
    out.at(static_cast<int>(t), options.merge_polarities ? 0 : e.p, e.y, e.x) += 1.0;
  }
  return out;
}

FrameSequence bin_events(const EventStream& stream, std::uint64_t time_window) {
  BinOptions options;
  options.time_window = time_window;
  return bin_events(stream, options);
}

FrameSequence downscale(const FrameSequence& frames, int factor) {
  if (factor < 1) throw ConfigError("downscale: factor must be >= 1");
  if (frames.height % factor != 0 || frames.width % factor != 0)
    throw ConfigError("downscale: frame dimensions not divisible by factor");
  FrameSequence out;
  out.channels = frames.channels;
  out.height = frames.height / factor;
  out.width = frames.width / factor;
  out.time_window = frames.time_window;
  out.data.setZero(frames.steps(), out.frame_size());
  for (int t = 0; t < frames.steps(); ++t)
    for (int c = 0; c < frames.channels; ++c)
      for (int y = 0; y < frames.height; ++y)
        for (int x = 0; x < frames.width; ++x) out.at(t, c, y / factor, x / factor) += frames.at(t, c, y, x);
  return out;
}

std::vector<Eigen::MatrixXd> gabor_kernels(const GaborSpec& spec) {
  if (spec.orientations < 1 || spec.wavelengths.empty() || spec.kernel_size < 1)
    throw ConfigError("gabor_kernels: empty bank");
  const int r = spec.kernel_size / 2;
  std::vector<Eigen::MatrixXd> bank;
  for (double wavelength : spec.wavelengths) {
    if (!(wavelength > 0)) throw ConfigError("gabor_kernels: wavelengths must be positive");
    const double sigma = spec.sigma_per_wavelength * wavelength;
    for (int o = 0; o < spec.orientations; ++o) {
      const double angle = std::numbers::pi * o / spec.orientations;
      const double c = std::cos(angle), s = std::sin(angle);
      Eigen::MatrixXd k(spec.kernel_size, spec.kernel_size);
      for (int i = 0; i < spec.kernel_size; ++i) {
        for (int j = 0; j < spec.kernel_size; ++j) {
          const double x = j - r, y = i - r;
          const double xr = x * c + y * s;
          const double yr = -x * s + y * c;
          const double envelope =
              std::exp(-(xr * xr + spec.aspect_ratio * spec.aspect_ratio * yr * yr) / (2 * sigma * sigma));
          k(i, j) = envelope * std::cos(2 * std::numbers::pi * xr / wavelength + spec.phase);
        }
      }
      if (spec.zero_mean) k.array() -= k.mean();
      bank.push_back(std::move(k));
    }
  }
  return bank;
}

namespace {

Eigen::MatrixXd correlate_same(const Eigen::MatrixXd& image, const Eigen::MatrixXd& kernel) {
  const Eigen::Index r = kernel.rows() / 2;
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(image.rows() + kernel.rows() - 1, image.cols() + kernel.cols() - 1);
  padded.block(r, r, image.rows(), image.cols()) = image;
  Eigen::MatrixXd out(image.rows(), image.cols());
  for (Eigen::Index y = 0; y < image.rows(); ++y)
    for (Eigen::Index x = 0; x < image.cols(); ++x)
      out(y, x) = padded.block(y, x, kernel.rows(), kernel.cols()).cwiseProduct(kernel).sum();
  return out;
}

}  // namespace

FrameSequence gabor_bank(const FrameSequence& frames, const GaborSpec& spec) {
  if (spec.kernel_size > frames.height || spec.kernel_size > frames.width)
    throw ConfigError("gabor_bank: kernel larger than frame");
  const auto bank = gabor_kernels(spec);
  const int in_channels = spec.merge_channels ? 1 : frames.channels;

  FrameSequence out;
  out.channels = in_channels * static_cast<int>(bank.size());
  out.height = frames.height;
  out.width = frames.width;
  out.time_window = frames.time_window;
  out.data.setZero(frames.steps(), out.frame_size());

  using RowImage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int plane = frames.height * frames.width;
  for (int t = 0; t < frames.steps(); ++t) {
    for (int c = 0; c < in_channels; ++c) {
      RowImage image = RowImage::Zero(frames.height, frames.width);
      if (spec.merge_channels) {
        for (int src = 0; src < frames.channels; ++src)
          image += Eigen::Map<const RowImage>(frames.data.row(t).data() + src * plane, frames.height, frames.width);
      } else {
        image = Eigen::Map<const RowImage>(frames.data.row(t).data() + c * plane, frames.height, frames.width);
      }
      if (image.isZero(0)) continue;
      for (std::size_t k = 0; k < bank.size(); ++k) {
        const RowImage response = correlate_same(image, bank[k]).cwiseMax(0.0);
        const int oc = c * static_cast<int>(bank.size()) + static_cast<int>(k);
        Eigen::Map<RowImage>(out.data.row(t).data() + oc * plane, frames.height, frames.width) = response;
      }
    }
  }
  return out;
}

InputDriver::InputDriver(const InputMap& map, const PresentationSpec& presentation)
    : weights_(map.weight_matrix()), scale_(presentation.input_scale) {
  weights_.makeCompressed();
}

Eigen::MatrixXd frames_to_spike_drive(const FrameSequence& frames, const InputMap& map,
                                      const PresentationSpec& presentation) {
  if (frames.frame_size() != map.n_inputs)
    throw ConfigError("frames_to_spike_drive: frame size differs from input neuron count");
  const InputDriver driver(map, presentation);
  Eigen::MatrixXd drive = Eigen::MatrixXd::Zero(map.n_targets, frames.steps());
  for (int t = 0; t < frames.steps(); ++t) {
    auto col = drive.col(t);
    driver.accumulate(frames, t, col);
  }
  return drive;
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw DatasetError("read_events: unexpected end of file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_events(std::ostream& os, const EventStream& stream) {
  os.write("EVS1", 4);
  put_le<std::uint32_t>(os, stream.width);
  put_le<std::uint32_t>(os, stream.height);
  put_le<std::uint32_t>(os, stream.label.value_or(kNoLabel));
  put_le<std::uint64_t>(os, stream.events.size());
  for (const auto& e : stream.events) {
    put_le<std::uint64_t>(os, e.t);
    put_le<std::uint16_t>(os, e.x);
    put_le<std::uint16_t>(os, e.y);
    put_le<std::uint8_t>(os, e.p);
  }
  if (!os) throw DatasetError("write_events: write failed");
}

EventStream read_events(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || std::string(magic.data(), 4) != "EVS1") throw DatasetError("read_events: bad magic");
  EventStream stream;
  stream.width = get_le<std::uint32_t>(is);
  stream.height = get_le<std::uint32_t>(is);
  const auto label = get_le<std::uint32_t>(is);
  if (label != kNoLabel) stream.label = label;
  const auto count = get_le<std::uint64_t>(is);
  stream.events.resize(count);
  for (auto& e : stream.events) {
    e.t = get_le<std::uint64_t>(is);
    e.x = get_le<std::uint16_t>(is);
    e.y = get_le<std::uint16_t>(is);
    e.p = get_le<std::uint8_t>(is);
  }
  return stream;
}

void write_events(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("write_events: cannot open " + path.string());
  write_events(os, stream);
}

EventStream read_events(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError("read_events: cannot open " + path.string());
  return read_events(is);
}

void write_events_csv(std::ostream& os, const EventStream& stream) {
  os << "t,x,y,p\n";
  for (const auto& e : stream.events) os << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
}

EventStream read_events_csv(std::istream& is, std::uint32_t width, std::uint32_t height,
                            std::optional<std::uint32_t> label) {
  EventStream stream;
  stream.label = label;
  std::string line;
  std::uint32_t max_x = 0, max_y = 0;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line_no == 1 && line.find_first_not_of("0123456789,\r ") != std::string::npos) continue;
    std::istringstream fields(line);
    unsigned long long t = 0;
    unsigned x = 0, y = 0, p = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    fields >> t >> c1 >> x >> c2 >> y >> c3 >> p;
    if (!fields || c1 != ',' || c2 != ',' || c3 != ',' || x > 0xFFFF || y > 0xFFFF || p > 1)
      throw DatasetError("read_events_csv: malformed line " + std::to_string(line_no));
    stream.events.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                             static_cast<std::uint8_t>(p)});
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  const bool any = !stream.events.empty();
  stream.width = width ? width : (any ? max_x + 1 : 0);
  stream.height = height ? height : (any ? max_y + 1 : 0);
  stream.validate();
  return stream;
}

}  // namespace lsm
