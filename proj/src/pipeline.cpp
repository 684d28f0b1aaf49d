#include "latentpose/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/model_io.hpp"
#include "latentpose/report.hpp"

namespace latentpose {

namespace fs = std::filesystem;

namespace {

std::string fmt6(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void log_epochs(const std::vector<EpochRecord>& records, LossLog* log) {
  if (!log) return;
  log->header = "epoch,train_loss,eval_mpjpe";
  for (const auto& r : records)
    log->lines.push_back(std::to_string(r.epoch) + "," + fmt6(r.train_loss) + "," +
                         fmt6(r.eval_mpjpe));
}

std::vector<Vector> scaled_poses(const std::vector<DatasetRecord>& records, double scale) {
  std::vector<Vector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.pose.scaled(1.0 / scale).values());
  return out;
}

fs::path model_path(const fs::path& dir, Stage s) { return dir / (to_string(s) + ".model"); }

ModelFile require_model(const fs::path& dir, Stage s, Stage needed_by) {
  const fs::path p = model_path(dir, s);
  if (!fs::exists(p))
    throw DependencyError("stage '" + to_string(needed_by) + "' requires the '" +
                          to_string(s) + "' stage to be trained first (missing " + p.string() +
                          ")");
  return load_model(p);
}

void stamp(ModelFile& m, const ExperimentConfig& config, const Dataset& data, Stage stage,
           std::uint64_t data_hash) {
  m.set("stage", to_string(stage));
  m.set("config_hash", config_hash(config));
  m.set("dataset_hash", hex64(data_hash));
  m.set("skeleton", data.skeleton);
  m.set("seed", std::to_string(config.seed));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", config.pose_scale_mm);
  m.set("pose_scale_mm", buf);
  std::snprintf(buf, sizeof buf, "%.17g", config.ae_lambda);
  m.set("ae.lambda", buf);
}

double model_scale(const ModelFile& m) {
  try {
    const double s = std::stod(m.get("pose_scale_mm"));
    if (s > 0.0 && std::isfinite(s)) return s;
  } catch (const std::logic_error&) {
  }
  throw FormatError("model: bad pose_scale_mm");
}

void check_compatible(const ModelFile& m, const Dataset& data, const std::string& what) {
  if (m.has("skeleton") && m.get("skeleton") != data.skeleton)
    throw DimensionError(what + ": model skeleton '" + m.get("skeleton") +
                         "' does not match dataset skeleton '" + data.skeleton + "'");
}

SkeletonModel skeleton_for(const Dataset& data) {
  SkeletonModel model = SkeletonModel::default_human();
  if (data.skeleton != model.name)
    throw DimensionError("unsupported skeleton '" + data.skeleton + "'");
  return model;
}

bool non_empty_dir(const fs::path& p) {
  return fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p));
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::ae: return "ae";
    case Stage::latent: return "latent";
    case Stage::finetune: return "finetune";
    case Stage::direct: return "direct";
    case Stage::pca: return "pca";
    case Stage::extrafc: return "extrafc";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::ae, Stage::latent, Stage::finetune, Stage::direct, Stage::pca,
                  Stage::extrafc})
    if (to_string(s) == name) return s;
  throw UsageError("unknown stage '" + name + "' (expected ae|latent|finetune|direct|pca|extrafc)");
}

RegressionSet regression_set(const std::vector<DatasetRecord>& records, double pose_scale_mm) {
  RegressionSet set;
  for (const auto& r : records) set.images.push_back(r.image);
  set.poses = scaled_poses(records, pose_scale_mm);
  return set;
}

std::string LossLog::csv() const {
  std::string s = header + "\n";
  for (const auto& l : lines) s += l + "\n";
  return s;
}

AutoEncoderParams train_ae_stage(const ExperimentConfig& config, const Dataset& data,
                                 LossLog* log) {
  config.validate();
  const auto poses = scaled_poses(data.train, config.pose_scale_mm);
  AeTrainConfig ae = ae_train_config(config);
  std::string phase = "pretrain";
  std::size_t layer = 0;
  AeTrainHooks hooks;
  hooks.on_layer_start = [&](std::size_t j, std::span<const Vector>) { layer = j; };
  hooks.on_epoch = [&](std::size_t epoch, double loss) {
    if (log)
      log->lines.push_back(phase + "," + std::to_string(layer) + "," + std::to_string(epoch) +
                           "," + fmt6(loss));
  };
  if (log) log->header = "phase,layer,epoch,loss";
  AutoEncoderParams params = pretrain_layerwise(poses, ae, hooks);
  phase = "finetune";
  layer = 0;
  ae.epochs = config.ae_finetune_epochs;
  return finetune_ae(std::move(params), poses, ae, hooks);
}

ImageEncoderParams train_latent_stage(const ExperimentConfig& config, const Dataset& data,
                                      const AutoEncoderParams& ae, LossLog* log) {
  config.validate();
  RngStream init = RngStream(config.seed).substream(0);
  ImageEncoderParams cnn =
      ImageEncoderParams::initialize(cnn_shape(config, ae.latent_dim()), init);
  std::vector<EpochRecord> records;
  cnn = train_latent_regression(std::move(cnn), ae, regression_set(data.train, config.pose_scale_mm),
                                reg_train_config(config, config.latent_epochs), &records);
  log_epochs(records, log);
  return cnn;
}

StackedNetworkParams train_finetune_stage(const ExperimentConfig& config, const Dataset& data,
                                          const AutoEncoderParams& ae,
                                          const ImageEncoderParams& cnn, LossLog* log) {
  config.validate();
  std::vector<EpochRecord> records;
  auto net = finetune_stacked(stack_decoder(cnn, ae),
                              regression_set(data.train, config.pose_scale_mm),
                              reg_train_config(config, config.finetune_epochs), &records);
  log_epochs(records, log);
  return net;
}

StackedNetworkParams train_baseline_stage(const ExperimentConfig& config, const Dataset& data,
                                          Stage stage, LossLog* log) {
  config.validate();
  const RegressionSet set = regression_set(data.train, config.pose_scale_mm);
  const RegTrainConfig reg = reg_train_config(config, config.baseline_epochs);
  const std::size_t pose_dim = set.poses.front().size();
  std::vector<EpochRecord> records;
  StackedNetworkParams net;
  switch (stage) {
    case Stage::direct:
      net = train_direct_baseline(set, cnn_shape(config, pose_dim), reg, &records);
      break;
    case Stage::extrafc:
      net = train_extrafc_baseline(set, cnn_shape(config, pose_dim), reg, config.extra_dim,
                                   &records);
      break;
    case Stage::pca:
      net = train_pca_baseline(set, cnn_shape(config, config.pca_k), reg, config.pca_k, &records)
                .network;
      break;
    default:
      throw UsageError("stage '" + to_string(stage) + "' is not a baseline");
  }
  log_epochs(records, log);
  return net;
}

StackedNetworkParams untrained_network(const ExperimentConfig& config) {
  const std::size_t pose_dim = SkeletonModel::default_human().pose_dim();
  RngStream init = RngStream(config.seed).substream(0);
  StackedNetworkParams net;
  net.encoder = ImageEncoderParams::initialize(cnn_shape(config, pose_dim), init);
  return net;
}

std::vector<Pose> predict_poses(const StackedNetworkParams& net, double pose_scale_mm,
                                const std::vector<DatasetRecord>& records) {
  std::vector<Pose> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(predict_pose(net, r.image).scaled(pose_scale_mm));
  return out;
}

EvalReport evaluate_network(const std::string& method, const StackedNetworkParams& net,
                            double pose_scale_mm, const std::vector<DatasetRecord>& records,
                            const SkeletonModel& model) {
  std::vector<Pose> truths;
  std::vector<std::string> actions;
  for (const auto& r : records) {
    truths.push_back(r.pose);
    actions.push_back(r.action);
  }
  const auto preds = predict_poses(net, pose_scale_mm, records);
  return evaluate_method(method, preds, truths, actions, model);
}

std::uint64_t run_gen_data(const ExperimentConfig& config, const fs::path& out, bool force,
                           std::ostream& log) {
  config.validate();
  if (non_empty_dir(out) && !force)
    throw UsageError("output directory " + out.string() +
                     " already exists and is not empty (use --force to overwrite)");
  const Dataset ds = generate_dataset(SkeletonModel::default_human(), dataset_spec(config));
  const std::uint64_t hash = save_dataset(ds, out);
  log << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test samples to "
      << out.string() << " (content hash " << hex64(hash) << ")\n";
  return hash;
}

void run_train(const ExperimentConfig& config, const fs::path& data_dir,
               const fs::path& models_dir, Stage stage, bool force, std::ostream& log) {
  config.validate();
  const fs::path target = model_path(models_dir, stage);
  if (fs::exists(target) && !force)
    throw UsageError(target.string() + " already exists (use --force to overwrite)");
  // Dependencies are checked before the dataset is read.
  ModelFile ae_file, latent_file;
  if (stage == Stage::latent || stage == Stage::finetune)
    ae_file = require_model(models_dir, Stage::ae, stage);
  if (stage == Stage::finetune) latent_file = require_model(models_dir, Stage::latent, stage);

  const Dataset data = load_dataset(data_dir);
  const std::uint64_t data_hash = dataset_content_hash(data);
  LossLog loss;
  ModelFile out;
  switch (stage) {
    case Stage::ae:
      out = autoencoder_to_model(train_ae_stage(config, data, &loss));
      break;
    case Stage::latent: {
      check_compatible(ae_file, data, "latent");
      const auto ae = autoencoder_from_model(ae_file);
      out = encoder_to_model(train_latent_stage(config, data, ae, &loss));
      break;
    }
    case Stage::finetune: {
      check_compatible(ae_file, data, "finetune");
      check_compatible(latent_file, data, "finetune");
      const auto ae = autoencoder_from_model(ae_file);
      const auto cnn = encoder_from_model(latent_file);
      out = network_to_model(train_finetune_stage(config, data, ae, cnn, &loss));
      break;
    }
    default:
      out = network_to_model(train_baseline_stage(config, data, stage, &loss));
      break;
  }
  stamp(out, config, data, stage, data_hash);
  fs::create_directories(models_dir);
  save_model(out, target);
  write_file(models_dir / (to_string(stage) + "_loss.csv"), loss.csv());
  log << "stage " << to_string(stage) << ": wrote " << target.string() << " ("
      << loss.lines.size() << " log rows)\n";
}

std::vector<EvalReport> run_eval(const ExperimentConfig& config, const fs::path& data_dir,
                                 const fs::path& models_dir, const fs::path& out,
                                 const EvalOptions& options, std::ostream& log) {
  config.validate();
  const Dataset data = load_dataset(data_dir);
  const SkeletonModel model = skeleton_for(data);
  std::vector<std::pair<std::string, fs::path>> used;
  std::vector<EvalReport> reports;

  auto eval_file = [&](const std::string& method, Stage stage) {
    const fs::path p = model_path(models_dir, stage);
    if (!fs::exists(p)) return;
    const ModelFile m = load_model(p);
    check_compatible(m, data, method);
    reports.push_back(
        evaluate_network(method, network_from_model(m), model_scale(m), data.test, model));
    used.emplace_back(method, p);
  };
  eval_file("OURS-FT", Stage::finetune);
  if (fs::exists(model_path(models_dir, Stage::latent)) &&
      fs::exists(model_path(models_dir, Stage::ae))) {
    const ModelFile ae_file = load_model(model_path(models_dir, Stage::ae));
    const ModelFile cnn_file = load_model(model_path(models_dir, Stage::latent));
    check_compatible(ae_file, data, "OURS-noFT");
    check_compatible(cnn_file, data, "OURS-noFT");
    const auto net =
        stack_decoder(encoder_from_model(cnn_file), autoencoder_from_model(ae_file));
    reports.push_back(evaluate_network("OURS-noFT", net, model_scale(ae_file), data.test, model));
    used.emplace_back("OURS-noFT", model_path(models_dir, Stage::latent));
  }
  eval_file("CNN-Direct", Stage::direct);
  eval_file("CNN-ExtraFC", Stage::extrafc);
  eval_file("CNN-PCA", Stage::pca);
  if (reports.empty() && !options.references)
    throw DependencyError("eval: no trained models found in " + models_dir.string() +
                          " (run the train stages first)");
  if (options.references) {
    std::vector<Pose> truths;
    std::vector<std::string> actions;
    for (const auto& r : data.test) {
      truths.push_back(r.pose);
      actions.push_back(r.action);
    }
    reports.push_back(evaluate_method("ground-truth", truths, truths, actions, model));
    reports.push_back(evaluate_network("untrained", untrained_network(config),
                                       config.pose_scale_mm, data.test, model));
  }

  std::vector<std::string> limb_names;
  for (const auto& l : model.limbs) limb_names.push_back(l.name);
  std::vector<ReportRow> rows;
  for (const auto& rep : reports) {
    auto r = report_rows(rep, data.spec.actions);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  fs::create_directories(out / "heatmaps");
  write_file(out / "report.csv", render_report_csv(rows));
  write_file(out / "mpjpe_table.csv", render_mpjpe_table(reports, data.spec.actions));
  std::string manifest = "config_hash = " + config_hash(config) + "\n" +
                         "dataset_hash = " + hex64(dataset_content_hash(data)) + "\n";
  for (const auto& [method, p] : used)
    manifest += "model." + method + " = " + hex64(fnv1a64(read_file(p))) + "\n";
  for (const auto& rep : reports) {
    write_heatmap(rep.ratio_errors, limb_names, out / "heatmaps" / rep.method);
    manifest += "flagged." + rep.method + " = " + std::to_string(rep.flagged_samples.size()) + "\n";
  }
  write_file(out / "eval_manifest.txt", manifest);
  for (const auto& rep : reports)
    log << rep.method << ": mpjpe " << format_value(rep.overall_mpjpe) << " mm, full-body ratio sum "
        << format_value(rep.sums.full) << "\n";
  return reports;
}

std::vector<std::size_t> parse_layer_spec(const std::string& spec) {
  std::vector<std::size_t> out;
  std::string item;
  auto flush = [&] {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("bad layer spec '" + spec + "' (expected e.g. 2000 or 300-300)");
    out.push_back(std::stoull(item));
    item.clear();
  };
  for (char c : spec) {
    if (c == '-' || c == ',')
      flush();
    else
      item += c;
  }
  flush();
  return out;
}

std::string layer_label(const std::vector<std::size_t>& layers) {
  std::string s;
  for (auto v : layers) s += (s.empty() ? "" : "-") + std::to_string(v);
  return s;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const fs::path& data_dir,
                                const std::vector<std::vector<std::size_t>>& values,
                                const fs::path& out, std::ostream& log) {
  if (values.empty()) throw UsageError("sweep: no values given");
  const Dataset data = load_dataset(data_dir);
  const SkeletonModel model = skeleton_for(data);
  std::vector<SweepRow> rows;
  for (const auto& layers : values) {
    SweepRow row;
    row.label = layer_label(layers);
    try {
      ExperimentConfig c = config;
      c.ae_layers = layers;
      if (c.ae_noise_sigmas.size() != layers.size()) {
        // sigma halves with every layer
        const double base = config.ae_noise_sigmas.front();
        c.ae_noise_sigmas.clear();
        for (std::size_t j = 0; j < layers.size(); ++j)
          c.ae_noise_sigmas.push_back(base / static_cast<double>(1ull << j));
      }
      c.validate();
      const fs::path dir = out / ("ae-" + row.label);
      fs::create_directories(dir);
      LossLog ae_log, latent_log, ft_log;
      const auto ae = train_ae_stage(c, data, &ae_log);
      const auto cnn = train_latent_stage(c, data, ae, &latent_log);
      const auto net = train_finetune_stage(c, data, ae, cnn, &ft_log);
      const std::uint64_t data_hash = dataset_content_hash(data);
      ModelFile m = network_to_model(net);
      stamp(m, c, data, Stage::finetune, data_hash);
      save_model(m, dir / "finetune.model");
      write_file(dir / "ae_loss.csv", ae_log.csv());
      write_file(dir / "latent_loss.csv", latent_log.csv());
      write_file(dir / "finetune_loss.csv", ft_log.csv());
      row.report = evaluate_network("OURS-FT", net, c.pose_scale_mm, data.test, model);
      row.ok = true;
      log << "sweep " << row.label << ": mpjpe " << format_value(row.report.overall_mpjpe)
          << " mm\n";
    } catch (const Error& e) {
      row.message = e.what();
      log << "sweep " << row.label << ": FAILED: " << row.message << "\n";
    }
    rows.push_back(std::move(row));
  }
  fs::create_directories(out);
  write_file(out / "sweep.csv", render_sweep_csv(rows));
  write_file(out / "sweep_manifest.txt", "config_hash = " + config_hash(config) + "\n" +
                                             "dataset_hash = " +
                                             hex64(dataset_content_hash(data)) + "\n");
  return rows;
}

std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "ae_layers,status,mpjpe_mm,lower_sum,upper_sum,full_sum,message\n";
  for (const auto& r : rows) {
    std::string msg = r.message;
    for (char& c : msg)
      if (c == ',' || c == '\n' || c == '"') c = ';';
    if (r.ok)
      s += r.label + ",ok," + format_value(r.report.overall_mpjpe) + "," +
           format_value(r.report.sums.lower) + "," + format_value(r.report.sums.upper) + "," +
           format_value(r.report.sums.full) + ",\n";
    else
      s += r.label + ",failed,,,,," + msg + "\n";
  }
  return s;
}

}  // namespace latentpose
