#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentpose/autoencoder.hpp"
#include "latentpose/dataset.hpp"
#include "latentpose/regressor.hpp"

namespace latentpose {

/// Everything a pipeline run depends on. Text form: one `key = value` per
/// line, `#` starts a comment, lists are comma separated. Unknown keys and
/// malformed values are rejected with ConfigError.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  std::size_t n_train = 200;
  std::size_t n_test = 50;
  std::vector<std::string> train_subjects{"S1", "S5", "S6", "S7", "S8"};
  std::vector<std::string> test_subjects{"S9", "S11"};
  std::vector<std::string> actions{"walking", "eating", "greeting", "discussion"};
  ImageFormat image_format = ImageFormat::f64;
  CameraConfig camera;

  std::vector<std::size_t> ae_layers{2000};
  std::vector<double> ae_noise_sigmas{40.0};  // mm
  double ae_lambda = 0.1;
  double ae_learning_rate = 1e-3;
  std::size_t ae_batch_size = 32;
  std::size_t ae_pretrain_epochs = 60;
  std::size_t ae_finetune_epochs = 30;
  /// Networks see poses divided by this (mm per network unit).
  double pose_scale_mm = 1000.0;

  std::size_t cnn_input_size = 32;
  std::array<std::size_t, 3> cnn_kernel_sizes{5, 3, 3};
  std::array<std::size_t, 3> cnn_channels{8, 16, 32};
  std::vector<std::size_t> cnn_fc_widths{128, 128, 64};

  double train_learning_rate = 1e-3;
  std::size_t train_batch_size = 16;
  std::size_t latent_epochs = 60;
  std::size_t finetune_epochs = 60;
  std::size_t baseline_epochs = 120;
  double dropout_p = 0.5;
  bool augment = false;

  std::size_t pca_k = 40;
  std::size_t extra_dim = 2000;

  std::string output_dir = "runs";

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);
/// FNV-1a of to_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

DatasetSpec dataset_spec(const ExperimentConfig& config);
/// Sigmas converted to network units, lambda divided by pose_scale_mm^2.
AeTrainConfig ae_train_config(const ExperimentConfig& config);
CnnShape cnn_shape(const ExperimentConfig& config, std::size_t output_dim);
RegTrainConfig reg_train_config(const ExperimentConfig& config, std::size_t epochs);

}  // namespace latentpose
