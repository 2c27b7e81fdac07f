#include "vcsp/dataio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "vcsp/errors.hpp"
#include "vcsp/rng.hpp"

namespace vcsp {
namespace {

constexpr char kDatasetMagic[8] = {'V', 'C', 'S', 'P', 'D', 'S', '1', '\0'};
constexpr char kModelMagic[8] = {'V', 'C', 'S', 'P', 'N', 'N', '1', '\0'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path.string());
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failure");
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    const std::array<std::uint8_t, 4> b{
        static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
        static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    bytes(b.data(), 4);
  }
  void f32(float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path.string());
  }
  std::size_t offset() const { return offset_; }
  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("truncated while reading ") + what, offset_);
    }
    offset_ += n;
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::array<std::uint8_t, 4> b;
    bytes(b.data(), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::ifstream in_;
  std::size_t offset_ = 0;
};

struct Palette {
  int n_colors = 0;
  int n_shapes = 0;
};

Palette class_layout(int num_classes) {
  Palette p;
  p.n_colors = 1;
  while (p.n_colors * p.n_colors < num_classes) ++p.n_colors;
  p.n_colors = std::min(p.n_colors, 4);
  p.n_shapes = (num_classes + p.n_colors - 1) / p.n_colors;
  return p;
}

// signed distance to the shape boundary (> 0 inside), in pixels. Thin,
// orientation-bearing shapes come first so small class counts stay sensitive
// to rotation and blur.
double shape_sdf(int shape, double di, double dj, double r) {
  const double d = std::sqrt(di * di + dj * dj);
  switch (shape) {
    case 0: {  // cross
      const double arm = 0.25 * r;
      const double a = std::min(arm - std::abs(di), r - std::abs(dj));
      const double b = std::min(arm - std::abs(dj), r - std::abs(di));
      return std::max(a, b);
    }
    case 1: {  // triangle, apex up
      const double half = 0.85 * (di + r) / 2.0;
      return std::min({di + r, half - std::abs(dj), 0.9 * r - di});
    }
    case 2:  // square
      return 0.9 * r - std::max(std::abs(di), std::abs(dj));
    case 3:  // ring
      return std::min(r - d, d - 0.55 * r);
    default:  // disk
      return r - d;
  }
}

}  // namespace

Dataset gen_synthetic(int n, int num_classes, int size, std::uint64_t seed) {
  if (num_classes < 2 || num_classes > 20) {
    throw std::invalid_argument("gen_synthetic: num_classes must be in [2, 20]");
  }
  if (n < num_classes) throw std::invalid_argument("gen_synthetic: need n >= num_classes");
  if (size < 8) throw std::invalid_argument("gen_synthetic: size must be >= 8");

  const Palette layout = class_layout(num_classes);
  const double hues[4] = {0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0, kPi / 3.0};

  Rng rng(derive_seed(seed, 0xda7a5e7u));
  Dataset ds;
  ds.num_classes = num_classes;
  ds.images.reserve(n);
  ds.labels.reserve(n);

  for (int idx = 0; idx < n; ++idx) {
    const int label = idx % num_classes;
    const int shape = label / layout.n_colors;
    const int color = label % layout.n_colors;

    // a quarter of the images are small and low-contrast so the trained
    // model keeps thin margins for the attacks to work against
    const bool hard = rng.uniform() < 0.25;
    const double bg = rng.uniform(0.15, 0.55);
    const double hue =
        std::clamp(hues[color] + rng.uniform(-0.35, 0.35), 0.0, kTwoPi);
    const double sat = hard ? rng.uniform(0.45, 0.80) : rng.uniform(0.60, 1.0);
    const double val = hard ? rng.uniform(0.35, 0.60) : rng.uniform(0.45, 0.95);
    const auto rgb = hsv_to_rgb_pixel(hue, sat, val);
    const double ci = (size - 1) / 2.0 + rng.uniform(-1.5, 1.5);
    const double cj = (size - 1) / 2.0 + rng.uniform(-1.5, 1.5);
    const double radius =
        (hard ? rng.uniform(0.13, 0.20) : rng.uniform(0.18, 0.30)) * size;
    const double noise_amp = hard ? 0.08 : 0.05;

    Image img = Image::zero(size, size);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        const double cov =
            std::clamp(shape_sdf(shape, i - ci, j - cj, radius) + 0.5, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) {
          const double noise = rng.uniform(-noise_amp, noise_amp);
          img(i, j, c) = std::clamp(bg * (1.0 - cov) + rgb[c] * cov + noise, 0.0, 1.0);
        }
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  Writer w(path);
  w.bytes(kDatasetMagic, 8);
  const Eigen::Index h = ds.images.empty() ? 0 : ds.images[0].height;
  const Eigen::Index wd = ds.images.empty() ? 0 : ds.images[0].width;
  w.u32(static_cast<std::uint32_t>(ds.images.size()));
  w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(wd));
  w.u32(3);
  w.u32(static_cast<std::uint32_t>(ds.num_classes));
  std::vector<std::uint8_t> rec;
  for (std::size_t r = 0; r < ds.images.size(); ++r) {
    const Image& img = ds.images[r];
    if (img.height != h || img.width != wd) {
      throw std::invalid_argument("write_dataset: ragged image sizes");
    }
    rec.clear();
    rec.push_back(static_cast<std::uint8_t>(ds.labels[r]));
    for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
      for (int c = 0; c < 3; ++c) {
        rec.push_back(static_cast<std::uint8_t>(std::lround(img.pixels(p, c) * 255.0)));
      }
    }
    w.bytes(rec.data(), rec.size());
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8, "magic");
  if (std::memcmp(magic, kDatasetMagic, 8) != 0) {
    throw FormatError("bad dataset magic", 0);
  }
  const std::uint32_t count = r.u32("record count");
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t channels = r.u32("channel count");
  if (channels != 3) throw FormatError("dataset channel count must be 3", 20);
  const std::uint32_t classes = r.u32("class count");
  if (h < 2 || w < 2 || classes < 1) {
    throw FormatError("implausible dataset header", 8);
  }

  Dataset ds;
  ds.num_classes = static_cast<int>(classes);
  ds.images.reserve(count);
  ds.labels.reserve(count);
  std::vector<std::uint8_t> rec(1 + static_cast<std::size_t>(h) * w * 3);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t rec_off = r.offset();
    r.bytes(rec.data(), rec.size(), "record");
    if (rec[0] >= classes) {
      throw FormatError("label out of range", rec_off);
    }
    Image img = Image::zero(h, w);
    for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
      for (int c = 0; c < 3; ++c) {
        img.pixels(p, c) = rec[1 + p * 3 + c] / 255.0;
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(rec[0]);
  }
  return ds;
}

Dataset read_cifar10(const std::filesystem::path& path) {
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat: " + path.string());
  constexpr std::size_t kRecord = 3073;
  if (file_size == 0 || file_size % kRecord != 0) {
    throw FormatError("CIFAR-10 file length is not a multiple of 3073",
                      static_cast<std::size_t>(file_size / kRecord) * kRecord);
  }
  Reader r(path);
  Dataset ds;
  ds.num_classes = 10;
  const std::size_t count = file_size / kRecord;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  std::vector<std::uint8_t> rec(kRecord);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t rec_off = r.offset();
    r.bytes(rec.data(), kRecord, "record");
    if (rec[0] > 9) throw FormatError("CIFAR-10 label out of range", rec_off);
    Image img = Image::zero(32, 32);
    for (int c = 0; c < 3; ++c) {
      for (Eigen::Index p = 0; p < 1024; ++p) {
        img.pixels(p, c) = rec[1 + c * 1024 + p] / 255.0;
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(rec[0]);
  }
  return ds;
}

Dataset read_any_dataset(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open for reading: " + path.string());
    char magic[8] = {};
    probe.read(magic, 8);
    if (probe.gcount() == 8 && std::memcmp(magic, kDatasetMagic, 8) == 0) {
      return read_dataset(path);
    }
  }
  return read_cifar10(path);
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  Writer w(path);
  w.bytes(kModelMagic, 8);
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  for (const Layer& l : params.layers) {
    w.u8(static_cast<std::uint8_t>(l.type));
    if (l.type == Layer::Type::Conv) {
      w.u32(static_cast<std::uint32_t>(l.out_ch));
      w.u32(static_cast<std::uint32_t>(l.in_ch));
      w.u32(static_cast<std::uint32_t>(l.kh));
      w.u32(static_cast<std::uint32_t>(l.kw));
    } else {
      w.u32(static_cast<std::uint32_t>(l.weight.rows()));
      w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    }
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) {
        w.f32(static_cast<float>(l.weight(i, j)));
      }
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) {
      w.f32(static_cast<float>(l.bias(i)));
    }
  }
}

ModelParams load_model(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8, "magic");
  if (std::memcmp(magic, kModelMagic, 8) != 0) {
    throw FormatError("bad model magic", 0);
  }
  const std::uint32_t n_layers = r.u32("layer count");
  if (n_layers == 0 || n_layers > 64) throw FormatError("implausible layer count", 8);

  ModelParams params;
  params.layers.reserve(n_layers);
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const std::size_t layer_off = r.offset();
    const std::uint8_t tag = r.u8("layer tag");
    Layer l;
    Eigen::Index rows, cols;
    if (tag == 0) {
      l.type = Layer::Type::Conv;
      l.out_ch = static_cast<int>(r.u32("conv out"));
      l.in_ch = static_cast<int>(r.u32("conv in"));
      l.kh = static_cast<int>(r.u32("conv kh"));
      l.kw = static_cast<int>(r.u32("conv kw"));
      if (l.out_ch < 1 || l.in_ch < 1 || l.kh < 1 || l.kw < 1 || l.kh % 2 == 0 ||
          l.kw % 2 == 0 || static_cast<long long>(l.out_ch) * l.in_ch * l.kh * l.kw > (1 << 26)) {
        throw FormatError("implausible conv dims", layer_off);
      }
      rows = l.out_ch;
      cols = static_cast<Eigen::Index>(l.in_ch) * l.kh * l.kw;
    } else if (tag == 1) {
      l.type = Layer::Type::Dense;
      rows = static_cast<Eigen::Index>(r.u32("dense out"));
      cols = static_cast<Eigen::Index>(r.u32("dense in"));
      if (rows < 1 || cols < 1 || rows * cols > (1ll << 26)) {
        throw FormatError("implausible dense dims", layer_off);
      }
    } else {
      throw FormatError("unknown layer tag", layer_off);
    }
    l.weight.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        l.weight(i, j) = static_cast<double>(r.f32("weights"));
      }
    }
    l.bias.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      l.bias(i) = static_cast<double>(r.f32("biases"));
    }
    params.layers.push_back(std::move(l));
  }
  if (!r.at_eof()) {
    throw FormatError("trailing bytes after last layer", r.offset());
  }
  return params;
}

void write_front(const std::filesystem::path& path, std::span<const FrontRow> front) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "genome,f1_robust_accuracy,f2_l2,asr,wall_time_s\n";
  char buf[256];
  for (const FrontRow& row : front) {
    std::snprintf(buf, sizeof(buf), ",%.12g,%.12g,%.12g,%.12g\n", row.f1, row.f2,
                  row.asr, row.wall_time_s);
    out << row.genome.str() << buf;
  }
  if (!out) throw IoError("write failure: " + path.string());
}

nlohmann::json eval_report_json(const EvalReport& rep) {
  return nlohmann::json{
      {"n_total", rep.n_total},
      {"n_adv_correct", rep.n_adv_correct},
      {"n_clean_correct", rep.n_clean_correct},
      {"robust_accuracy", rep.robust_accuracy},
      {"asr", rep.asr},
      {"l2", rep.l2},
      {"wall_time", rep.wall_time},
      {"mode", rep.mode},
      {"sequence", rep.sequence.genes},
  };
}

void write_report(const std::filesystem::path& path, const RunReport& report) {
  nlohmann::json j;
  j["config"] = report.config;
  j["reports"] = nlohmann::json::array();
  for (const EvalReport& rep : report.reports) {
    j["reports"].push_back(eval_report_json(rep));
  }
  j["front"] = nlohmann::json::array();
  for (const FrontRow& row : report.front) {
    j["front"].push_back({{"genome", row.genome.genes},
                          {"f1_robust_accuracy", row.f1},
                          {"f2_l2", row.f2},
                          {"asr", row.asr},
                          {"wall_time_s", row.wall_time_s}});
  }
  j["seeds"] = report.seeds;
  j["timestamps"] = {{"started_at", report.started_at}, {"finished_at", report.finished_at}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failure: " + path.string());
}

}  // namespace vcsp
