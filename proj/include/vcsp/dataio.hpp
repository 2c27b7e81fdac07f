#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcsp/evaluation.hpp"
#include "vcsp/model.hpp"

namespace vcsp {

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
};

/// Colored shapes on noisy backgrounds; the class couples shape AND color so
/// photometric attacks have genuine attack surface. Deterministic given seed;
/// labels cycle through the classes.
Dataset gen_synthetic(int n, int num_classes, int size, std::uint64_t seed);

/// VCSPDS1: magic "VCSPDS1\0", u32 count/H/W/C=3/num_classes (little-endian),
/// then per record a u8 label and H*W*3 u8 pixels (row-major, channel-last,
/// round(intensity*255)).
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

/// Standard CIFAR-10 binary: consecutive 3073-byte records, planar RGB 32x32.
Dataset read_cifar10(const std::filesystem::path& path);

/// Reads VCSPDS1 by magic, otherwise CIFAR-10 when the length fits.
Dataset read_any_dataset(const std::filesystem::path& path);

/// VCSPNN1: magic "VCSPNN1\0", u32 layer count, per layer u8 tag (0=conv,
/// 1=dense), dims as u32 (conv: out,in,kh,kw; dense: out,in), then f32
/// little-endian weights (row-major) and biases.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

struct FrontRow {
  AttackSequence genome;
  Real f1 = 0.0;
  Real f2 = 0.0;
  Real asr = 0.0;
  Real wall_time_s = 0.0;
};

/// CSV columns: genome,f1_robust_accuracy,f2_l2,asr,wall_time_s.
void write_front(const std::filesystem::path& path, std::span<const FrontRow> front);

struct RunReport {
  nlohmann::json config;
  std::vector<EvalReport> reports;
  std::vector<FrontRow> front;
  std::vector<std::uint64_t> seeds;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json eval_report_json(const EvalReport& rep);
void write_report(const std::filesystem::path& path, const RunReport& report);

}  // namespace vcsp
