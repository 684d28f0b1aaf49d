#include "latentpose/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::string_view kPoseMagic = "LPPOSES1";
constexpr std::string_view kImageMagic = "LPIMAGE1";

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string exact(double v) {
  char buf[40];
  for (int precision : {15, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::size_t index_of(const std::vector<std::string>& list, const std::string& v) {
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == v) return i;
  throw FormatError("dataset: unknown label '" + v + "'");
}

std::string encode_poses(const std::vector<DatasetRecord>& records,
                         const DatasetSpec& spec, std::size_t dim) {
  BinaryWriter w;
  w.bytes(kPoseMagic);
  w.u32(kDatasetVersion);
  w.u64(records.size());
  w.u32(static_cast<std::uint32_t>(dim));
  std::vector<std::string> all_subjects = spec.train_subjects;
  all_subjects.insert(all_subjects.end(), spec.test_subjects.begin(), spec.test_subjects.end());
  for (const auto& r : records) {
    w.u64(r.id);
    w.u32(static_cast<std::uint32_t>(index_of(all_subjects, r.subject)));
    w.u32(static_cast<std::uint32_t>(index_of(spec.actions, r.action)));
    for (double v : r.pose.coords()) w.f64(v);
  }
  return w.data();
}

std::string encode_images(const std::vector<DatasetRecord>& records,
                          const DatasetSpec& spec) {
  BinaryWriter w;
  w.bytes(kImageMagic);
  w.u32(kDatasetVersion);
  w.u64(records.size());
  const auto size = static_cast<std::uint32_t>(spec.camera.image_size);
  w.u32(1);
  w.u32(size);
  w.u32(size);
  w.u8(spec.image_format == ImageFormat::u8 ? 1 : 0);
  for (const auto& r : records) {
    for (double v : r.image.data()) {
      if (spec.image_format == ImageFormat::u8)
        w.u8(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
      else
        w.f64(v);
    }
  }
  return w.data();
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

std::string to_string(ImageFormat format) {
  return format == ImageFormat::u8 ? "u8" : "f64";
}

ImageFormat parse_image_format(const std::string& name) {
  if (name == "f64") return ImageFormat::f64;
  if (name == "u8") return ImageFormat::u8;
  throw ParameterError("image format must be f64 or u8, got '" + name + "'");
}

void DatasetSpec::validate() const {
  if (n_train == 0 || n_test == 0) throw ParameterError("dataset: n_train and n_test must be > 0");
  if (train_subjects.empty() || test_subjects.empty())
    throw ParameterError("dataset: both splits need at least one subject");
  if (actions.empty()) throw ParameterError("dataset: at least one action required");
  const auto subjects = default_subjects();
  const auto presets = default_actions();
  std::set<std::string> train(train_subjects.begin(), train_subjects.end());
  for (const auto& s : train_subjects) (void)find_subject(subjects, s);
  for (const auto& s : test_subjects) {
    (void)find_subject(subjects, s);
    if (train.count(s))
      throw ParameterError("dataset: subject " + s + " appears in both train and test splits");
  }
  for (const auto& a : actions) (void)find_action(presets, a);
  camera.validate();
}

Dataset generate_dataset(const SkeletonModel& model, const DatasetSpec& spec) {
  model.validate();
  spec.validate();
  const auto subjects = default_subjects();
  const auto presets = default_actions();
  Dataset ds;
  ds.spec = spec;
  ds.skeleton = model.name;
  const RngStream root(spec.seed);

  auto make = [&](std::uint64_t id, std::size_t k,
                  const std::vector<std::string>& split_subjects) {
    const auto& subject = find_subject(subjects, split_subjects[k % split_subjects.size()]);
    const auto& action =
        find_action(presets, spec.actions[(k / split_subjects.size()) % spec.actions.size()]);
    const SkeletonModel variant = model.scaled(subject.scale).with_ranges(action.ranges);
    RngStream rng = root.substream(id);
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Pose pose = sample_pose(variant, rng);
      try {
        Tensor image = render(pose, variant, spec.camera);
        if (spec.image_format == ImageFormat::u8)
          for (auto& v : image.data()) v = quantize(v);
        return DatasetRecord{id, std::move(pose), std::move(image), subject.id, action.name};
      } catch (const RangeError&) {
      }
    }
    throw RangeError("dataset: could not draw an in-frame pose for sample " +
                     std::to_string(id));
  };
  for (std::size_t i = 0; i < spec.n_train; ++i)
    ds.train.push_back(make(i, i, spec.train_subjects));
  for (std::size_t i = 0; i < spec.n_test; ++i)
    ds.test.push_back(make(spec.n_train + i, i, spec.test_subjects));
  return ds;
}

namespace {

struct EncodedDataset {
  std::string train_poses, train_images, test_poses, test_images;
};

EncodedDataset encode_all(const Dataset& ds) {
  const std::size_t dim = ds.train.empty() ? 0 : ds.train.front().pose.dim();
  return {encode_poses(ds.train, ds.spec, dim), encode_images(ds.train, ds.spec),
          encode_poses(ds.test, ds.spec, dim), encode_images(ds.test, ds.spec)};
}

std::uint64_t hash_encoded(const EncodedDataset& e) {
  std::uint64_t h = kFnvOffset;
  for (const auto* part : {&e.train_poses, &e.train_images, &e.test_poses, &e.test_images})
    h = fnv1a64(*part, h);
  return h;
}

std::string subject_list(const std::vector<std::string>& ids) {
  const auto table = default_subjects();
  std::vector<std::string> items;
  for (const auto& id : ids) items.push_back(id + ":" + exact(find_subject(table, id).scale));
  return join(items);
}

std::string manifest_text(const Dataset& ds, std::uint64_t hash) {
  const auto& s = ds.spec;
  std::ostringstream m;
  m << "format = latentpose-dataset\n"
    << "version = " << kDatasetVersion << "\n"
    << "seed = " << s.seed << "\n"
    << "skeleton = " << ds.skeleton << "\n"
    << "n_train = " << s.n_train << "\n"
    << "n_test = " << s.n_test << "\n"
    << "train_subjects = " << subject_list(s.train_subjects) << "\n"
    << "test_subjects = " << subject_list(s.test_subjects) << "\n"
    << "actions = " << join(s.actions) << "\n"
    << "camera.axes = " << s.camera.axes_name() << "\n"
    << "camera.image_size = " << s.camera.image_size << "\n"
    << "camera.mm_per_pixel = " << exact(s.camera.mm_per_pixel) << "\n"
    << "camera.thickness = " << exact(s.camera.thickness) << "\n"
    << "image_format = " << to_string(s.image_format) << "\n"
    << "content_hash = " << hex64(hash) << "\n";
  return m.str();
}

std::map<std::string, std::string> parse_manifest(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest: malformed line '" + line + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<DatasetRecord> decode_split(const std::string& poses_bytes,
                                        const std::string& image_bytes,
                                        const DatasetSpec& spec,
                                        const std::string& split) {
  BinaryReader pr(poses_bytes, split + "_poses.bin");
  if (pr.bytes(kPoseMagic.size()) != kPoseMagic)
    throw FormatError(split + "_poses.bin: bad magic");
  if (pr.u32() != kDatasetVersion)
    throw FormatError(split + "_poses.bin: unsupported version");
  const std::uint64_t count = pr.u64();
  const std::uint32_t dim = pr.u32();
  BinaryReader ir(image_bytes, split + "_images.bin");
  if (ir.bytes(kImageMagic.size()) != kImageMagic)
    throw FormatError(split + "_images.bin: bad magic");
  if (ir.u32() != kDatasetVersion)
    throw FormatError(split + "_images.bin: unsupported version");
  if (ir.u64() != count) throw FormatError(split + ": pose and image counts differ");
  const std::uint32_t channels = ir.u32(), height = ir.u32(), width = ir.u32();
  const std::uint8_t format = ir.u8();
  if (format > 1) throw FormatError(split + "_images.bin: unknown pixel format");
  if ((format == 1) != (spec.image_format == ImageFormat::u8))
    throw FormatError(split + "_images.bin: pixel format disagrees with the manifest");
  if (height != spec.camera.image_size || width != spec.camera.image_size || channels != 1)
    throw FormatError(split + "_images.bin: image size disagrees with the manifest");

  std::vector<std::string> all_subjects = spec.train_subjects;
  all_subjects.insert(all_subjects.end(), spec.test_subjects.begin(), spec.test_subjects.end());
  std::vector<DatasetRecord> records;
  records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    DatasetRecord r;
    r.id = pr.u64();
    const std::uint32_t subject = pr.u32(), action = pr.u32();
    if (subject >= all_subjects.size() || action >= spec.actions.size())
      throw FormatError(split + "_poses.bin: label index out of range");
    r.subject = all_subjects[subject];
    r.action = spec.actions[action];
    Vector coords(dim);
    for (auto& v : coords) v = pr.f64();
    r.pose = Pose(std::move(coords));
    r.image = Tensor({channels, height, width});
    for (auto& v : r.image.data()) v = format == 1 ? ir.u8() / 255.0 : ir.f64();
    records.push_back(std::move(r));
  }
  if (!pr.at_end()) throw FormatError(split + "_poses.bin: trailing bytes");
  if (!ir.at_end()) throw FormatError(split + "_images.bin: trailing bytes");
  return records;
}

}  // namespace

std::uint64_t dataset_content_hash(const Dataset& dataset) {
  return hash_encoded(encode_all(dataset));
}

std::uint64_t save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const EncodedDataset e = encode_all(dataset);
  const std::uint64_t hash = hash_encoded(e);
  write_file(dir / "train_poses.bin", e.train_poses);
  write_file(dir / "train_images.bin", e.train_images);
  write_file(dir / "test_poses.bin", e.test_poses);
  write_file(dir / "test_images.bin", e.test_images);
  write_file(dir / "manifest.txt", manifest_text(dataset, hash));
  return hash;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto kv = parse_manifest(read_file(dir / "manifest.txt"));
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest: missing key '" + key + "'");
    return it->second;
  };
  if (get("format") != "latentpose-dataset") throw FormatError("manifest: not a dataset manifest");
  if (get("version") != std::to_string(kDatasetVersion))
    throw FormatError("manifest: unsupported dataset version " + get("version"));
  Dataset ds;
  auto& s = ds.spec;
  try {
    s.seed = std::stoull(get("seed"));
    s.n_train = std::stoull(get("n_train"));
    s.n_test = std::stoull(get("n_test"));
    auto ids = [](const std::string& list) {
      std::vector<std::string> out;
      for (const auto& item : split(list, ',')) out.push_back(item.substr(0, item.find(':')));
      return out;
    };
    s.train_subjects = ids(get("train_subjects"));
    s.test_subjects = ids(get("test_subjects"));
    s.actions = split(get("actions"), ',');
    s.camera.axes = CameraConfig::parse_axes(get("camera.axes"));
    s.camera.image_size = std::stoull(get("camera.image_size"));
    s.camera.mm_per_pixel = std::stod(get("camera.mm_per_pixel"));
    s.camera.thickness = std::stod(get("camera.thickness"));
    s.image_format = parse_image_format(get("image_format"));
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("manifest: bad value (") + e.what() + ")");
  }
  ds.skeleton = get("skeleton");
  s.validate();
  ds.train = decode_split(read_file(dir / "train_poses.bin"),
                          read_file(dir / "train_images.bin"), s, "train");
  ds.test = decode_split(read_file(dir / "test_poses.bin"),
                         read_file(dir / "test_images.bin"), s, "test");
  if (ds.train.size() != s.n_train || ds.test.size() != s.n_test)
    throw FormatError("dataset: record counts disagree with the manifest");
  if (hex64(dataset_content_hash(ds)) != get("content_hash"))
    throw FormatError("dataset: content hash mismatch");
  return ds;
}

}  // namespace latentpose
