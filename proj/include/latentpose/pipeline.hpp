#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "latentpose/autoencoder.hpp"
#include "latentpose/config.hpp"
#include "latentpose/dataset.hpp"
#include "latentpose/eval.hpp"
#include "latentpose/regressor.hpp"

namespace latentpose {

enum class Stage { ae, latent, finetune, direct, pca, extrafc };

std::string to_string(Stage stage);
Stage parse_stage(const std::string& name);

/// Poses divided by `pose_scale_mm`, paired with their images.
RegressionSet regression_set(const std::vector<DatasetRecord>& records,
                             double pose_scale_mm);

/// Rows of a training log: "phase,layer,epoch,loss" for the auto-encoder,
/// "epoch,train_loss,eval_mpjpe" for the regressors.
struct LossLog {
  std::string header;
  std::vector<std::string> lines;
  std::string csv() const;
};

// In-memory stages; each is deterministic in (config, dataset).
AutoEncoderParams train_ae_stage(const ExperimentConfig& config, const Dataset& data,
                                 LossLog* log = nullptr);
ImageEncoderParams train_latent_stage(const ExperimentConfig& config, const Dataset& data,
                                      const AutoEncoderParams& ae, LossLog* log = nullptr);
StackedNetworkParams train_finetune_stage(const ExperimentConfig& config, const Dataset& data,
                                          const AutoEncoderParams& ae,
                                          const ImageEncoderParams& cnn,
                                          LossLog* log = nullptr);
/// direct, pca or extrafc.
StackedNetworkParams train_baseline_stage(const ExperimentConfig& config, const Dataset& data,
                                          Stage stage, LossLog* log = nullptr);
/// Untrained CNN-Direct network, as a reference point for evaluation.
StackedNetworkParams untrained_network(const ExperimentConfig& config);

/// Predictions in mm for every record.
std::vector<Pose> predict_poses(const StackedNetworkParams& net, double pose_scale_mm,
                                const std::vector<DatasetRecord>& records);
EvalReport evaluate_network(const std::string& method, const StackedNetworkParams& net,
                            double pose_scale_mm, const std::vector<DatasetRecord>& records,
                            const SkeletonModel& model);

// File-level commands.

/// Refuses a non-empty `out` unless `force`. Returns the content hash.
std::uint64_t run_gen_data(const ExperimentConfig& config, const std::filesystem::path& out,
                           bool force, std::ostream& log);

/// Writes `<models>/<stage>.model` and `<models>/<stage>_loss.csv`. Missing
/// prior-stage models raise DependencyError naming the stage.
void run_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& models_dir, Stage stage, bool force,
               std::ostream& log);

struct EvalOptions {
  /// Adds "ground-truth" (truth against itself) and "untrained" rows.
  bool references = false;
};

/// Evaluates every method whose models exist in `models_dir` and writes
/// report.csv, mpjpe_table.csv, eval_manifest.txt and heatmaps/ into `out`.
std::vector<EvalReport> run_eval(const ExperimentConfig& config,
                                 const std::filesystem::path& data_dir,
                                 const std::filesystem::path& models_dir,
                                 const std::filesystem::path& out, const EvalOptions& options,
                                 std::ostream& log);

/// One sweep entry: the AE layer sizes to try.
std::vector<std::size_t> parse_layer_spec(const std::string& spec);
std::string layer_label(const std::vector<std::size_t>& layers);

struct SweepRow {
  std::string label;
  bool ok = false;
  EvalReport report;
  std::string message;
};

/// Runs ae, latent and finetune per value and evaluates the fine-tuned
/// network; failures are recorded and the sweep continues. Writes
/// `<out>/sweep.csv` and per-run directories.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const std::filesystem::path& data_dir,
                                const std::vector<std::vector<std::size_t>>& values,
                                const std::filesystem::path& out, std::ostream& log);
std::string render_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace latentpose
