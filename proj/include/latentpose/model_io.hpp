#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "latentpose/autoencoder.hpp"
#include "latentpose/regressor.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

/// Flat model container shared by every trained artifact.
///
/// Layout (little-endian):
///   "LPMODEL1"                      8 bytes
///   u32 version                     currently 1
///   str kind                        u32 length + bytes
///   u32 n_meta, then n_meta x (str key, str value)
///   u32 n_tensors, then per tensor:
///     str name, u32 rank, rank x u64 dims, prod(dims) x f64 (row-major)
struct ModelFile {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void set(const std::string& key, const std::string& value);
  /// Throws FormatError when absent.
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;
  void add(const std::string& name, Tensor t);
  const Tensor& tensor(const std::string& name) const;
  bool operator==(const ModelFile&) const = default;
};

std::string serialize_model(const ModelFile& model);
ModelFile parse_model(const std::string& bytes, const std::string& what = "model");
void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

ModelFile autoencoder_to_model(const AutoEncoderParams& params);
AutoEncoderParams autoencoder_from_model(const ModelFile& model);
ModelFile encoder_to_model(const ImageEncoderParams& params);
ImageEncoderParams encoder_from_model(const ModelFile& model);
ModelFile network_to_model(const StackedNetworkParams& params);
StackedNetworkParams network_from_model(const ModelFile& model);

}  // namespace latentpose
