#include "latentpose/model_io.hpp"

#include <sstream>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

constexpr std::string_view kMagic = "LPMODEL1";
constexpr std::uint32_t kVersion = 1;

template <typename C>
std::string join_sizes(const C& values) {
  std::string s;
  for (auto v : values) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoull(item));
    } catch (const std::logic_error&) {
      throw FormatError("model: bad size list '" + s + "'");
    }
  }
  return out;
}

std::size_t parse_size(const std::string& s) {
  const auto v = parse_sizes(s);
  if (v.size() != 1) throw FormatError("model: bad size '" + s + "'");
  return v[0];
}

void expect_kind(const ModelFile& m, const std::string& kind) {
  if (m.kind != kind)
    throw FormatError("model: expected kind '" + kind + "', found '" + m.kind + "'");
}

void put_shape(ModelFile& m, const CnnShape& s) {
  m.set("cnn.image_size", std::to_string(s.image_size));
  m.set("cnn.in_channels", std::to_string(s.in_channels));
  m.set("cnn.kernel_sizes", join_sizes(s.kernel_sizes));
  m.set("cnn.channels", join_sizes(s.channels));
  m.set("cnn.fc_widths", join_sizes(s.fc_widths));
  m.set("cnn.output_dim", std::to_string(s.output_dim));
}

CnnShape get_shape(const ModelFile& m) {
  CnnShape s;
  s.image_size = parse_size(m.get("cnn.image_size"));
  s.in_channels = parse_size(m.get("cnn.in_channels"));
  const auto k = parse_sizes(m.get("cnn.kernel_sizes"));
  const auto c = parse_sizes(m.get("cnn.channels"));
  if (k.size() != 3 || c.size() != 3) throw FormatError("model: expected three conv layers");
  std::copy(k.begin(), k.end(), s.kernel_sizes.begin());
  std::copy(c.begin(), c.end(), s.channels.begin());
  s.fc_widths = parse_sizes(m.get("cnn.fc_widths"));
  s.output_dim = parse_size(m.get("cnn.output_dim"));
  try {
    s.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("model: invalid cnn shape: ") + e.what());
  }
  return s;
}

void put_dense(ModelFile& m, const std::string& prefix, const DenseLayer& d) {
  m.add(prefix + ".weights", d.weights);
  m.add(prefix + ".bias", d.bias);
}

DenseLayer get_dense(const ModelFile& m, const std::string& prefix) {
  return {m.tensor(prefix + ".weights"), m.tensor(prefix + ".bias")};
}

void put_encoder(ModelFile& m, const ImageEncoderParams& p) {
  put_shape(m, p.shape);
  for (std::size_t i = 0; i < 3; ++i) {
    m.add("conv" + std::to_string(i) + ".kernels", p.conv[i].kernels);
    m.add("conv" + std::to_string(i) + ".bias", p.conv[i].bias);
  }
  for (std::size_t i = 0; i < p.fc.size(); ++i) put_dense(m, "fc" + std::to_string(i), p.fc[i]);
  put_dense(m, "out", p.out);
}

ImageEncoderParams get_encoder(const ModelFile& m) {
  ImageEncoderParams p;
  p.shape = get_shape(m);
  // Shapes are checked against a reference initialization.
  RngStream rng(0);
  const ImageEncoderParams ref = ImageEncoderParams::initialize(p.shape, rng);
  for (std::size_t i = 0; i < 3; ++i)
    p.conv[i] = {m.tensor("conv" + std::to_string(i) + ".kernels"),
                 m.tensor("conv" + std::to_string(i) + ".bias")};
  for (std::size_t i = 0; i < p.shape.fc_widths.size(); ++i)
    p.fc.push_back(get_dense(m, "fc" + std::to_string(i)));
  p.out = get_dense(m, "out");
  const auto a = p.parameters();
  const auto b = ref.parameters();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]->shape() != b[i]->shape())
      throw FormatError("model: tensor shape " + shape_string(a[i]->shape()) +
                        " does not match the recorded cnn shape (expected " +
                        shape_string(b[i]->shape()) + ")");
  return p;
}

}  // namespace

void ModelFile::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : metadata)
    if (k == key) {
      v = value;
      return;
    }
  metadata.emplace_back(key, value);
}

const std::string& ModelFile::get(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw FormatError("model: missing metadata key '" + key + "'");
}

bool ModelFile::has(const std::string& key) const {
  for (const auto& kv : metadata)
    if (kv.first == key) return true;
  return false;
}

void ModelFile::add(const std::string& name, Tensor t) {
  for (const auto& kv : tensors)
    if (kv.first == name) throw ParameterError("model: duplicate tensor '" + name + "'");
  tensors.emplace_back(name, std::move(t));
}

const Tensor& ModelFile::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw FormatError("model: missing tensor '" + name + "'");
}

std::string serialize_model(const ModelFile& model) {
  BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.str(model.kind);
  w.u32(static_cast<std::uint32_t>(model.metadata.size()));
  for (const auto& [k, v] : model.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(model.tensors.size()));
  for (const auto& [name, t] : model.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
  }
  return w.data();
}

ModelFile parse_model(const std::string& bytes, const std::string& what) {
  BinaryReader r(bytes, what);
  if (r.bytes(kMagic.size()) != kMagic) throw FormatError(what + ": not a model file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError(what + ": unsupported model version " + std::to_string(version));
  ModelFile m;
  m.kind = r.str();
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    m.metadata.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw FormatError(what + ": bad rank for tensor '" + name + "'");
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0 || d > r.remaining()) throw FormatError(what + ": bad dims for '" + name + "'");
      count *= d;
    }
    if (count > r.remaining() / 8) throw FormatError(what + ": truncated tensor '" + name + "'");
    Tensor t(shape);
    for (auto& v : t.data()) v = r.f64();
    m.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes");
  return m;
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

ModelFile load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.string());
}

ModelFile autoencoder_to_model(const AutoEncoderParams& params) {
  ModelFile m;
  m.kind = "autoencoder";
  std::vector<std::size_t> dims{params.input_dim()};
  for (const auto& l : params.layers()) dims.push_back(l.weights.dim(0));
  m.set("ae.dims", join_sizes(dims));
  m.set("ae.completeness", params.completeness() == Completeness::overcomplete
                               ? "overcomplete"
                               : "unconstrained");
  for (std::size_t j = 0; j < params.depth(); ++j) {
    const auto& l = params.layer(j);
    const std::string p = "layer" + std::to_string(j);
    m.add(p + ".weights", l.weights);
    m.add(p + ".encode_bias", l.encode_bias);
    m.add(p + ".decode_bias", l.decode_bias);
  }
  return m;
}

AutoEncoderParams autoencoder_from_model(const ModelFile& model) {
  expect_kind(model, "autoencoder");
  const auto dims = parse_sizes(model.get("ae.dims"));
  if (dims.size() < 2) throw FormatError("model: autoencoder needs at least one layer");
  const std::string& c = model.get("ae.completeness");
  if (c != "overcomplete" && c != "unconstrained")
    throw FormatError("model: unknown completeness '" + c + "'");
  std::vector<TiedLayer> layers;
  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    const std::string p = "layer" + std::to_string(j);
    layers.push_back({model.tensor(p + ".weights"), model.tensor(p + ".encode_bias"),
                      model.tensor(p + ".decode_bias")});
  }
  try {
    return AutoEncoderParams(std::move(layers), c == "overcomplete"
                                                    ? Completeness::overcomplete
                                                    : Completeness::unconstrained);
  } catch (const Error& e) {
    throw FormatError(std::string("model: inconsistent autoencoder: ") + e.what());
  }
}

ModelFile encoder_to_model(const ImageEncoderParams& params) {
  ModelFile m;
  m.kind = "image-encoder";
  put_encoder(m, params);
  return m;
}

ImageEncoderParams encoder_from_model(const ModelFile& model) {
  expect_kind(model, "image-encoder");
  return get_encoder(model);
}

ModelFile network_to_model(const StackedNetworkParams& params) {
  ModelFile m;
  m.kind = "stacked-network";
  put_encoder(m, params.encoder);
  m.set("decoder.layers", std::to_string(params.decoder.size()));
  for (std::size_t i = 0; i < params.decoder.size(); ++i)
    put_dense(m, "dec" + std::to_string(i), params.decoder[i]);
  return m;
}

StackedNetworkParams network_from_model(const ModelFile& model) {
  expect_kind(model, "stacked-network");
  StackedNetworkParams p;
  p.encoder = get_encoder(model);
  const std::size_t n = parse_size(model.get("decoder.layers"));
  std::size_t in = p.encoder.shape.output_dim;
  for (std::size_t i = 0; i < n; ++i) {
    DenseLayer d = get_dense(model, "dec" + std::to_string(i));
    if (d.weights.rank() != 2 || d.weights.dim(1) != in || d.bias.rank() != 1 ||
        d.bias.dim(0) != d.weights.dim(0))
      throw FormatError("model: decoder layer " + std::to_string(i) + " has inconsistent shape");
    in = d.weights.dim(0);
    p.decoder.push_back(std::move(d));
  }
  return p;
}

}  // namespace latentpose
