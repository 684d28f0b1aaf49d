#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentpose/pose.hpp"
#include "latentpose/render.hpp"
#include "latentpose/skeleton.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

enum class ImageFormat { f64, u8 };

std::string to_string(ImageFormat format);
ImageFormat parse_image_format(const std::string& name);

struct DatasetSpec {
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  std::vector<std::string> train_subjects{"S1", "S5", "S6", "S7", "S8"};
  std::vector<std::string> test_subjects{"S9", "S11"};
  std::vector<std::string> actions{"walking", "eating", "greeting", "discussion"};
  std::uint64_t seed = 1;
  CameraConfig camera;
  ImageFormat image_format = ImageFormat::f64;

  /// Throws ParameterError on empty splits, unknown ids or subjects shared
  /// between the splits.
  void validate() const;
};

struct DatasetRecord {
  std::uint64_t id = 0;
  Pose pose;     // mm, root-relative
  Tensor image;  // [1 x size x size], values in [0, 1]
  std::string subject;
  std::string action;
};

struct Dataset {
  DatasetSpec spec;
  std::string skeleton = "default-17";
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

/// Sample i (train first, then test) uses RngStream(seed).substream(i);
/// subjects and actions are assigned round-robin. Poses that do not fit the
/// frame are redrawn from the same stream.
Dataset generate_dataset(const SkeletonModel& model, const DatasetSpec& spec);

/// Writes manifest.txt, {train,test}_poses.bin and {train,test}_images.bin.
/// Returns the content hash recorded in the manifest.
std::uint64_t save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Verifies versions, sizes and the recorded content hash.
Dataset load_dataset(const std::filesystem::path& dir);

/// FNV-1a over the four binary files in a fixed order.
std::uint64_t dataset_content_hash(const Dataset& dataset);

}  // namespace latentpose
