#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tracepred/error.hpp"
#include "tracepred/features.hpp"

namespace tracepred {

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct NetConfig {
  std::vector<int> hidden_layers{30};
  std::string activation = "relu";
  int max_iterations = 3000;  // full-batch epochs
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 0;  // 0 means the full TRAIN partition
  double classification_threshold = 0.5;
  // Negatives kept per positive in TRAIN; unset keeps everything.
  std::optional<double> undersample_negatives;
  std::uint64_t seed = 1;

  static NetConfig nn() { return {}; }
  static NetConfig dnn() {
    NetConfig c;
    c.hidden_layers = {30, 30, 30, 30, 30};
    return c;
  }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

void validate(const NetConfig& cfg);

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward network: ReLU hidden layers, one sigmoid output unit, and
/// z-score standardization fitted on the training rows.
class TraceClassifier {
 public:
  TraceClassifier() = default;

  /// Randomly initialised (Glorot uniform, zero biases), identity scaling.
  static TraceClassifier initialise(std::size_t n_inputs, const NetConfig& cfg);

  std::size_t input_size() const noexcept { return mean_.size(); }
  const NetConfig& config() const noexcept { return config_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<double>& feature_mean() const noexcept { return mean_; }
  const std::vector<double>& feature_scale() const noexcept { return scale_; }

  /// Which FeatureVector columns feed the network; empty means all of them
  /// in order.
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  void set_columns(std::vector<std::size_t> cols) { columns_ = std::move(cols); }

  /// Fits mean/scale on the rows of x; constant columns get scale 1.
  void fit_standardizer(const Matrix& x);
  void set_standardizer(std::vector<double> mean, std::vector<double> scale);

  // Raw (unstandardized) inputs of size input_size().
  double logit(std::span<const double> raw) const;
  double predict(std::span<const double> raw) const;
  std::vector<double> predict(const Matrix& raw) const;

  /// Selects columns() from a full feature vector.
  std::vector<double> select(const FeatureVector& fv) const;

  friend bool operator==(const TraceClassifier&, const TraceClassifier&) = default;

 private:
  NetConfig config_;
  std::vector<std::size_t> columns_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<DenseLayer> layers_;
};

/// Gradients of the mean binary cross-entropy, laid out like the layers.
struct Gradients {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

double sigmoid(double z) noexcept;

// Mean BCE and its gradient over standardized inputs.
Gradients loss_and_gradient(const TraceClassifier& model, const Matrix& standardized,
                            std::span<const double> labels);
double loss(const TraceClassifier& model, const Matrix& standardized,
            std::span<const double> labels);

Matrix standardize(const TraceClassifier& model, const Matrix& raw);

/// State of Adam for every parameter, same layout as the layers.
struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  long step = 0;
};

AdamState adam_init(const TraceClassifier& model);
void adam_step(TraceClassifier& model, AdamState& state, const Gradients& grad,
               const NetConfig& cfg);

struct TrainingReport {
  std::vector<double> loss_history;  // one entry per epoch, before its update
  std::size_t train_rows = 0;
  std::size_t positives = 0;
};

/// Trains on a raw feature matrix. Throws TrainingError on single-class
/// data or a non-finite loss.
TraceClassifier train(const Matrix& x, std::span<const int> labels, const NetConfig& cfg,
                      TrainingReport* report = nullptr);

/// Trains on the TRAIN partition, using the given FeatureVector columns
/// (all eight when empty).
TraceClassifier train(const LabeledDataset& dataset, const NetConfig& cfg,
                      std::vector<std::size_t> columns = {},
                      TrainingReport* report = nullptr);

// Rows of a dataset partition as a raw matrix over the selected columns.
Matrix feature_matrix(const std::vector<Instance>& instances, Split split,
                      const std::vector<std::size_t>& columns = {});
std::vector<int> label_vector(const std::vector<Instance>& instances, Split split);

/// Sigmoid output on the standardized feature vector. Throws
/// InvalidArgument for non-finite features.
double predict_conf(const TraceClassifier& model, const FeatureVector& fv);

struct PredictedTrace {
  NodeId test = 0;
  std::map<NodeId, double> confidence;  // every function in COMPS
  std::vector<NodeId> positives;        // conf >= threshold, ascending

  /// Positive set recomputed for another threshold.
  std::vector<NodeId> positives_at(double threshold) const;
};

PredictedTrace predict_trace(const TraceClassifier& model, const CallGraph& g,
                             const Project& project, NodeId test, double threshold);
PredictedTrace predict_trace(const TraceClassifier& model, FeatureExtractor& extract,
                             const Project& project, NodeId test, double threshold);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  // Parameters whose ±step moved a ReLU across its kink; finite differences
  // are meaningless there.
  std::size_t parameters_skipped = 0;
};

/// Analytic gradient vs central finite differences (step 1e-5) for every
/// parameter, on standardized inputs.
GradientCheck loss_gradient_check(const TraceClassifier& model, const Matrix& standardized,
                                  std::span<const double> labels, double step = 1e-5);

std::string model_to_json(const TraceClassifier& model);
TraceClassifier model_from_json(const std::string& text);
void save_model(const TraceClassifier& model, const std::filesystem::path& path);
TraceClassifier load_model(const std::filesystem::path& path);

}  // namespace tracepred
