#include "latentpose/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element in '" + v + "'");
    out.push_back(item);
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError(key + ": value out of range");
  return static_cast<std::size_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(x))
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  for (int precision : {15, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

template <typename C, typename F>
std::string join(const C& c, F f) {
  std::string s;
  for (const auto& v : c) s += (s.empty() ? "" : ",") + f(v);
  return s;
}

std::string join_s(const std::vector<std::string>& c) {
  return join(c, [](const std::string& s) { return s; });
}

template <typename C>
std::string join_n(const C& c) {
  return join(c, [](std::size_t v) { return std::to_string(v); });
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

template <std::size_t N>
std::array<std::size_t, N> to_array(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != N)
    throw ConfigError(key + ": expected " + std::to_string(N) + " values, got '" + v + "'");
  std::array<std::size_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = to_size(key, items[i]);
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(v)) out.push_back(to_size(key, s));
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_size(k, v); }},
      {"data.n_train", [](auto& c, auto& k, auto& v) { c.n_train = to_size(k, v); }},
      {"data.n_test", [](auto& c, auto& k, auto& v) { c.n_test = to_size(k, v); }},
      {"data.train_subjects", [](auto& c, auto&, auto& v) { c.train_subjects = split_list(v); }},
      {"data.test_subjects", [](auto& c, auto&, auto& v) { c.test_subjects = split_list(v); }},
      {"data.actions", [](auto& c, auto&, auto& v) { c.actions = split_list(v); }},
      {"data.image_format",
       [](auto& c, auto& k, auto& v) {
         try {
           c.image_format = parse_image_format(v);
         } catch (const Error& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"camera.axes",
       [](auto& c, auto& k, auto& v) {
         try {
           c.camera.axes = CameraConfig::parse_axes(v);
         } catch (const Error& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"camera.image_size", [](auto& c, auto& k, auto& v) { c.camera.image_size = to_size(k, v); }},
      {"camera.mm_per_pixel",
       [](auto& c, auto& k, auto& v) { c.camera.mm_per_pixel = to_double(k, v); }},
      {"camera.thickness", [](auto& c, auto& k, auto& v) { c.camera.thickness = to_double(k, v); }},
      {"ae.layers", [](auto& c, auto& k, auto& v) { c.ae_layers = to_sizes(k, v); }},
      {"ae.noise_sigmas",
       [](auto& c, auto& k, auto& v) {
         c.ae_noise_sigmas.clear();
         for (const auto& s : split_list(v)) c.ae_noise_sigmas.push_back(to_double(k, s));
       }},
      {"ae.lambda", [](auto& c, auto& k, auto& v) { c.ae_lambda = to_double(k, v); }},
      {"ae.lr", [](auto& c, auto& k, auto& v) { c.ae_learning_rate = to_double(k, v); }},
      {"ae.batch_size", [](auto& c, auto& k, auto& v) { c.ae_batch_size = to_size(k, v); }},
      {"ae.pretrain_epochs",
       [](auto& c, auto& k, auto& v) { c.ae_pretrain_epochs = to_size(k, v); }},
      {"ae.finetune_epochs",
       [](auto& c, auto& k, auto& v) { c.ae_finetune_epochs = to_size(k, v); }},
      {"ae.pose_scale_mm", [](auto& c, auto& k, auto& v) { c.pose_scale_mm = to_double(k, v); }},
      {"cnn.input_size", [](auto& c, auto& k, auto& v) { c.cnn_input_size = to_size(k, v); }},
      {"cnn.kernel_sizes", [](auto& c, auto& k, auto& v) { c.cnn_kernel_sizes = to_array<3>(k, v); }},
      {"cnn.channels", [](auto& c, auto& k, auto& v) { c.cnn_channels = to_array<3>(k, v); }},
      {"cnn.fc_widths", [](auto& c, auto& k, auto& v) { c.cnn_fc_widths = to_sizes(k, v); }},
      {"train.lr", [](auto& c, auto& k, auto& v) { c.train_learning_rate = to_double(k, v); }},
      {"train.batch_size", [](auto& c, auto& k, auto& v) { c.train_batch_size = to_size(k, v); }},
      {"train.latent_epochs", [](auto& c, auto& k, auto& v) { c.latent_epochs = to_size(k, v); }},
      {"train.finetune_epochs",
       [](auto& c, auto& k, auto& v) { c.finetune_epochs = to_size(k, v); }},
      {"train.baseline_epochs",
       [](auto& c, auto& k, auto& v) { c.baseline_epochs = to_size(k, v); }},
      {"train.dropout", [](auto& c, auto& k, auto& v) { c.dropout_p = to_double(k, v); }},
      {"train.augment", [](auto& c, auto& k, auto& v) { c.augment = to_bool(k, v); }},
      {"baseline.pca_k", [](auto& c, auto& k, auto& v) { c.pca_k = to_size(k, v); }},
      {"baseline.extra_dim", [](auto& c, auto& k, auto& v) { c.extra_dim = to_size(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto wrap = [](const char* section, const std::function<void()>& check) {
    try {
      check();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("data", [&] { dataset_spec(*this).validate(); });
  wrap("ae", [&] { ae_train_config(*this).validate(); });
  if (!(pose_scale_mm > 0.0)) throw ConfigError("ae.pose_scale_mm must be > 0");
  const std::size_t pose_dim = SkeletonModel::default_human().pose_dim();
  if (ae_layers.empty() || ae_layers.back() <= pose_dim)
    throw ConfigError("ae.layers: the last layer must be wider than the pose dimension (" +
                      std::to_string(pose_dim) + ")");
  if (cnn_input_size > camera.image_size)
    throw ConfigError("cnn.input_size exceeds camera.image_size");
  if (augment && cnn_input_size == camera.image_size)
    throw ConfigError("train.augment needs cnn.input_size smaller than camera.image_size");
  wrap("cnn", [&] { cnn_shape(*this, ae_layers.back()).validate(); });
  wrap("train", [&] { reg_train_config(*this, latent_epochs).validate(); });
  if (pca_k == 0 || pca_k > pose_dim)
    throw ConfigError("baseline.pca_k must lie in [1, " + std::to_string(pose_dim) + "]");
  if (pca_k >= n_train) throw ConfigError("baseline.pca_k must be below data.n_train");
  if (extra_dim == 0) throw ConfigError("baseline.extra_dim must be > 0");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (auto [pos, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(pos->second) + ")");
    it->second(c, key, value);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n"
    << "data.n_train = " << c.n_train << "\n"
    << "data.n_test = " << c.n_test << "\n"
    << "data.train_subjects = " << join_s(c.train_subjects) << "\n"
    << "data.test_subjects = " << join_s(c.test_subjects) << "\n"
    << "data.actions = " << join_s(c.actions) << "\n"
    << "data.image_format = " << to_string(c.image_format) << "\n"
    << "camera.axes = " << c.camera.axes_name() << "\n"
    << "camera.image_size = " << c.camera.image_size << "\n"
    << "camera.mm_per_pixel = " << fmt(c.camera.mm_per_pixel) << "\n"
    << "camera.thickness = " << fmt(c.camera.thickness) << "\n"
    << "ae.layers = " << join_n(c.ae_layers) << "\n"
    << "ae.noise_sigmas = " << join(c.ae_noise_sigmas, fmt) << "\n"
    << "ae.lambda = " << fmt(c.ae_lambda) << "\n"
    << "ae.lr = " << fmt(c.ae_learning_rate) << "\n"
    << "ae.batch_size = " << c.ae_batch_size << "\n"
    << "ae.pretrain_epochs = " << c.ae_pretrain_epochs << "\n"
    << "ae.finetune_epochs = " << c.ae_finetune_epochs << "\n"
    << "ae.pose_scale_mm = " << fmt(c.pose_scale_mm) << "\n"
    << "cnn.input_size = " << c.cnn_input_size << "\n"
    << "cnn.kernel_sizes = " << join_n(c.cnn_kernel_sizes) << "\n"
    << "cnn.channels = " << join_n(c.cnn_channels) << "\n"
    << "cnn.fc_widths = " << join_n(c.cnn_fc_widths) << "\n"
    << "train.lr = " << fmt(c.train_learning_rate) << "\n"
    << "train.batch_size = " << c.train_batch_size << "\n"
    << "train.latent_epochs = " << c.latent_epochs << "\n"
    << "train.finetune_epochs = " << c.finetune_epochs << "\n"
    << "train.baseline_epochs = " << c.baseline_epochs << "\n"
    << "train.dropout = " << fmt(c.dropout_p) << "\n"
    << "train.augment = " << (c.augment ? "true" : "false") << "\n"
    << "baseline.pca_k = " << c.pca_k << "\n"
    << "baseline.extra_dim = " << c.extra_dim << "\n"
    << "output.dir = " << c.output_dir << "\n";
  return o.str();
}

std::string config_hash(const ExperimentConfig& config) {
  return hex64(fnv1a64(to_text(config)));
}

DatasetSpec dataset_spec(const ExperimentConfig& c) {
  DatasetSpec s;
  s.n_train = c.n_train;
  s.n_test = c.n_test;
  s.train_subjects = c.train_subjects;
  s.test_subjects = c.test_subjects;
  s.actions = c.actions;
  s.seed = c.seed;
  s.camera = c.camera;
  s.image_format = c.image_format;
  return s;
}

AeTrainConfig ae_train_config(const ExperimentConfig& c) {
  AeTrainConfig a;
  a.layer_sizes = c.ae_layers;
  a.noise_sigmas.clear();
  for (double s : c.ae_noise_sigmas) a.noise_sigmas.push_back(s / c.pose_scale_mm);
  // The penalty is unit-free while the reconstruction term scales with
  // units squared; this keeps the objective proportional to the mm one.
  a.lambda = c.ae_lambda / (c.pose_scale_mm * c.pose_scale_mm);
  a.learning_rate = c.ae_learning_rate;
  a.batch_size = c.ae_batch_size;
  a.epochs = c.ae_pretrain_epochs;
  a.seed = c.seed;
  return a;
}

CnnShape cnn_shape(const ExperimentConfig& c, std::size_t output_dim) {
  CnnShape s;
  s.image_size = c.cnn_input_size;
  s.in_channels = 1;
  s.kernel_sizes = c.cnn_kernel_sizes;
  s.channels = c.cnn_channels;
  s.fc_widths = c.cnn_fc_widths;
  s.output_dim = output_dim;
  return s;
}

RegTrainConfig reg_train_config(const ExperimentConfig& c, std::size_t epochs) {
  RegTrainConfig r;
  r.learning_rate = c.train_learning_rate;
  r.batch_size = c.train_batch_size;
  r.epochs = epochs;
  r.dropout_p = c.dropout_p;
  r.seed = c.seed;
  r.augment = c.augment;
  return r;
}

}  // namespace latentpose
