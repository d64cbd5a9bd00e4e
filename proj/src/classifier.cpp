#include "tracepred/classifier.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "tracepred/rng.hpp"

namespace tracepred {

namespace {

struct ForwardCache {
  std::vector<Matrix> z;  // pre-activations per layer
  std::vector<Matrix> a;  // a[0] = input, a[l+1] = activation of layer l
};

// a_out = act(a_in * W^T + b); ReLU on hidden layers, identity on the last.
ForwardCache forward(const TraceClassifier& model, const Matrix& input) {
  const auto& layers = model.layers();
  ForwardCache cache;
  cache.a.push_back(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    const auto& b = layers[l].bias;
    const Matrix& in = cache.a.back();
    Matrix z(in.rows, w.rows);
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double* x = in.data.data() + r * in.cols;
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double* wr = w.data.data() + o * w.cols;
        double s = b[o];
        for (std::size_t i = 0; i < w.cols; ++i) s += wr[i] * x[i];
        z(r, o) = s;
      }
    }
    Matrix a = z;
    if (l + 1 < layers.size())
      for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    cache.z.push_back(std::move(z));
    cache.a.push_back(std::move(a));
  }
  return cache;
}

// Numerically stable per-example BCE from the logit.
double bce(double z, double y) noexcept {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  for (const auto& l : layers)
    out.push_back({Matrix(l.weights.rows, l.weights.cols), std::vector<double>(l.bias.size())});
  return out;
}

void check_labels(std::span<const double> labels, std::size_t rows) {
  if (labels.size() != rows) throw InvalidArgument("label count does not match rows");
}

}  // namespace

void validate(const NetConfig& cfg) {
  for (int w : cfg.hidden_layers)
    if (w < 1) throw InvalidArgument("hidden layer widths must be >= 1");
  if (cfg.activation != "relu") throw InvalidArgument("only the 'relu' activation is supported");
  if (cfg.max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(cfg.classification_threshold > 0.0 && cfg.classification_threshold < 1.0))
    throw InvalidArgument("classification_threshold must be in (0,1)");
  if (cfg.undersample_negatives && !(*cfg.undersample_negatives > 0.0))
    throw InvalidArgument("undersample_negatives must be positive");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

TraceClassifier TraceClassifier::initialise(std::size_t n_inputs, const NetConfig& cfg) {
  validate(cfg);
  if (n_inputs == 0) throw InvalidArgument("network needs at least one input");
  TraceClassifier m;
  m.config_ = cfg;
  m.mean_.assign(n_inputs, 0.0);
  m.scale_.assign(n_inputs, 1.0);
  Rng rng(derive_seed(cfg.seed, "init"));
  std::vector<std::size_t> widths{n_inputs};
  for (int w : cfg.hidden_layers) widths.push_back(static_cast<std::size_t>(w));
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
    m.layers_.push_back(std::move(layer));
  }
  return m;
}

void TraceClassifier::fit_standardizer(const Matrix& x) {
  mean_.assign(x.cols, 0.0);
  scale_.assign(x.cols, 1.0);
  if (x.rows == 0) return;
  const double n = static_cast<double>(x.rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) s += x(r, c);
    const double mu = s / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x(r, c) - mu) * (x(r, c) - mu);
    const double sd = std::sqrt(ss / n);
    mean_[c] = mu;
    scale_[c] = sd > 1e-12 ? sd : 1.0;
  }
}

void TraceClassifier::set_standardizer(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != scale.size()) throw InvalidArgument("standardizer size mismatch");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

double TraceClassifier::logit(std::span<const double> raw) const {
  if (raw.size() != input_size())
    throw InvalidArgument("expected " + std::to_string(input_size()) + " features, got " +
                          std::to_string(raw.size()));
  std::vector<double> a(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) a[i] = (raw[i] - mean_[i]) / scale_[i];
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& w = layers_[l].weights;
    next.assign(w.rows, 0.0);
    for (std::size_t o = 0; o < w.rows; ++o) {
      double s = layers_[l].bias[o];
      for (std::size_t i = 0; i < w.cols; ++i) s += w(o, i) * a[i];
      next[o] = (l + 1 < layers_.size() && s < 0.0) ? 0.0 : s;
    }
    a.swap(next);
  }
  return a[0];
}

double TraceClassifier::predict(std::span<const double> raw) const {
  return sigmoid(logit(raw));
}

std::vector<double> TraceClassifier::predict(const Matrix& raw) const {
  std::vector<double> out(raw.rows);
  for (std::size_t r = 0; r < raw.rows; ++r) out[r] = predict(raw.row(r));
  return out;
}

std::vector<double> TraceClassifier::select(const FeatureVector& fv) const {
  const auto all = fv.values();
  if (columns_.empty()) return {all.begin(), all.end()};
  std::vector<double> out;
  out.reserve(columns_.size());
  for (std::size_t c : columns_) out.push_back(all.at(c));
  return out;
}

Matrix standardize(const TraceClassifier& model, const Matrix& raw) {
  if (raw.cols != model.input_size()) throw InvalidArgument("feature count mismatch");
  Matrix out = raw;
  for (std::size_t r = 0; r < raw.rows; ++r)
    for (std::size_t c = 0; c < raw.cols; ++c)
      out(r, c) = (raw(r, c) - model.feature_mean()[c]) / model.feature_scale()[c];
  return out;
}

double loss(const TraceClassifier& model, const Matrix& standardized,
            std::span<const double> labels) {
  check_labels(labels, standardized.rows);
  const auto cache = forward(model, standardized);
  const Matrix& z = cache.z.back();
  double s = 0.0;
  for (std::size_t r = 0; r < z.rows; ++r) s += bce(z(r, 0), labels[r]);
  return s / static_cast<double>(z.rows);
}

Gradients loss_and_gradient(const TraceClassifier& model, const Matrix& standardized,
                            std::span<const double> labels) {
  check_labels(labels, standardized.rows);
  if (standardized.rows == 0) throw InvalidArgument("empty batch");
  const auto& layers = model.layers();
  const auto cache = forward(model, standardized);
  const double n = static_cast<double>(standardized.rows);

  Gradients g;
  g.layers = zeros_like(layers);
  Matrix delta(standardized.rows, 1);
  for (std::size_t r = 0; r < standardized.rows; ++r) {
    const double z = cache.z.back()(r, 0);
    g.loss += bce(z, labels[r]);
    delta(r, 0) = (sigmoid(z) - labels[r]) / n;
  }
  g.loss /= n;

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& in = cache.a[l];
    const auto& w = layers[l].weights;
    auto& gw = g.layers[l].weights;
    auto& gb = g.layers[l].bias;
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double* x = in.data.data() + r * in.cols;
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double d = delta(r, o);
        if (d == 0.0) continue;
        gb[o] += d;
        double* gr = gw.data.data() + o * gw.cols;
        for (std::size_t i = 0; i < w.cols; ++i) gr[i] += d * x[i];
      }
    }
    if (l == 0) break;
    Matrix prev(in.rows, w.cols);
    const Matrix& zprev = cache.z[l - 1];
    for (std::size_t r = 0; r < in.rows; ++r) {
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double d = delta(r, o);
        if (d == 0.0) continue;
        const double* wr = w.data.data() + o * w.cols;
        for (std::size_t i = 0; i < w.cols; ++i) prev(r, i) += d * wr[i];
      }
      for (std::size_t i = 0; i < w.cols; ++i)
        if (zprev(r, i) <= 0.0) prev(r, i) = 0.0;
    }
    delta = std::move(prev);
  }
  return g;
}

AdamState adam_init(const TraceClassifier& model) {
  return {zeros_like(model.layers()), zeros_like(model.layers()), 0};
}

void adam_step(TraceClassifier& model, AdamState& state, const Gradients& grad,
               const NetConfig& cfg) {
  ++state.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  };
  auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights.data, state.m[l].weights.data, state.v[l].weights.data,
           grad.layers[l].weights.data);
    update(layers[l].bias, state.m[l].bias, state.v[l].bias, grad.layers[l].bias);
  }
}

TraceClassifier train(const Matrix& x, std::span<const int> labels, const NetConfig& cfg,
                      TrainingReport* report) {
  validate(cfg);
  if (labels.size() != x.rows) throw InvalidArgument("label count does not match rows");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size())
    throw TrainingError("training data must contain both labels (" +
                        std::to_string(positives) + " positives of " +
                        std::to_string(labels.size()) + ")");

  // Optional negative undersampling, seeded.
  std::vector<std::size_t> rows;
  if (cfg.undersample_negatives) {
    std::vector<std::size_t> neg;
    for (std::size_t r = 0; r < x.rows; ++r) (labels[r] ? rows : neg).push_back(r);
    Rng rng(derive_seed(cfg.seed, "undersample"));
    rng.shuffle(neg);
    const auto keep = std::min(
        neg.size(), static_cast<std::size_t>(std::ceil(*cfg.undersample_negatives *
                                                        static_cast<double>(positives))));
    rows.insert(rows.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(rows.begin(), rows.end());
  } else {
    rows.resize(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) rows[r] = r;
  }

  Matrix xt(rows.size(), x.cols);
  std::vector<double> yt(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double v = x(rows[k], c);
      if (!std::isfinite(v)) throw InvalidArgument("non-finite feature in training data");
      xt(k, c) = v;
    }
    yt[k] = labels[rows[k]];
  }

  TraceClassifier model = TraceClassifier::initialise(x.cols, cfg);
  model.fit_standardizer(xt);
  const Matrix z = standardize(model, xt);
  AdamState adam = adam_init(model);
  if (report) {
    report->train_rows = rows.size();
    report->positives = positives;
    report->loss_history.clear();
  }

  const std::size_t batch = cfg.batch_size == 0 ? z.rows : std::min(cfg.batch_size, z.rows);
  Rng batch_rng(derive_seed(cfg.seed, "batches"));
  std::vector<std::size_t> order(z.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_iterations; ++epoch) {
    if (batch == z.rows) {
      Gradients g = loss_and_gradient(model, z, yt);
      if (!std::isfinite(g.loss))
        throw TrainingError("non-finite loss at iteration " + std::to_string(epoch));
      if (report) report->loss_history.push_back(g.loss);
      adam_step(model, adam, g, cfg);
      continue;
    }
    batch_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < z.rows; start += batch) {
      const std::size_t end = std::min(start + batch, z.rows);
      Matrix xb(end - start, z.cols);
      std::vector<double> yb(end - start);
      for (std::size_t k = start; k < end; ++k) {
        std::copy_n(z.data.begin() + static_cast<std::ptrdiff_t>(order[k] * z.cols), z.cols,
                    xb.data.begin() + static_cast<std::ptrdiff_t>((k - start) * z.cols));
        yb[k - start] = yt[order[k]];
      }
      Gradients g = loss_and_gradient(model, xb, yb);
      if (!std::isfinite(g.loss))
        throw TrainingError("non-finite loss at iteration " + std::to_string(epoch));
      epoch_loss += g.loss * static_cast<double>(end - start);
      adam_step(model, adam, g, cfg);
    }
    if (report) report->loss_history.push_back(epoch_loss / static_cast<double>(z.rows));
  }
  return model;
}

Matrix feature_matrix(const std::vector<Instance>& instances, Split split,
                      const std::vector<std::size_t>& columns) {
  std::vector<std::size_t> cols = columns;
  if (cols.empty())
    for (std::size_t c = 0; c < kFeatureCount; ++c) cols.push_back(c);
  std::size_t n = 0;
  for (const auto& inst : instances) n += inst.split == split ? 1 : 0;
  Matrix m(n, cols.size());
  std::size_t r = 0;
  for (const auto& inst : instances) {
    if (inst.split != split) continue;
    const auto v = inst.features.values();
    for (std::size_t k = 0; k < cols.size(); ++k) m(r, k) = v.at(cols[k]);
    ++r;
  }
  return m;
}

std::vector<int> label_vector(const std::vector<Instance>& instances, Split split) {
  std::vector<int> y;
  for (const auto& inst : instances)
    if (inst.split == split) y.push_back(inst.label);
  return y;
}

TraceClassifier train(const LabeledDataset& dataset, const NetConfig& cfg,
                      std::vector<std::size_t> columns, TrainingReport* report) {
  const Matrix x = feature_matrix(dataset.instances, Split::Train, columns);
  const auto y = label_vector(dataset.instances, Split::Train);
  if (x.rows == 0) throw TrainingError("TRAIN partition is empty");
  TraceClassifier model = train(x, y, cfg, report);
  model.set_columns(std::move(columns));
  return model;
}

double predict_conf(const TraceClassifier& model, const FeatureVector& fv) {
  const auto v = model.select(fv);
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument("non-finite feature value");
  return model.predict(v);
}

std::vector<NodeId> PredictedTrace::positives_at(double threshold) const {
  std::vector<NodeId> out;
  for (const auto& [c, p] : confidence)
    if (p >= threshold) out.push_back(c);
  return out;
}

PredictedTrace predict_trace(const TraceClassifier& model, FeatureExtractor& extract,
                             const Project& project, NodeId test, double threshold) {
  (void)project.test(test);
  PredictedTrace pt;
  pt.test = test;
  for (const auto& f : project.functions())
    pt.confidence.emplace(f.id, predict_conf(model, extract(test, f.id)));
  pt.positives = pt.positives_at(threshold);
  return pt;
}

PredictedTrace predict_trace(const TraceClassifier& model, const CallGraph& g,
                             const Project& project, NodeId test, double threshold) {
  FeatureExtractor extract(project, g);
  return predict_trace(model, extract, project, test, threshold);
}

GradientCheck loss_gradient_check(const TraceClassifier& model, const Matrix& standardized,
                                  std::span<const double> labels, double step) {
  if (standardized.rows == 0) throw InvalidArgument("gradient check needs a non-empty batch");
  const Gradients analytic = loss_and_gradient(model, standardized, labels);

  auto relu_pattern = [&](const TraceClassifier& m) {
    const auto cache = forward(m, standardized);
    std::vector<bool> bits;
    for (std::size_t l = 0; l + 1 < cache.z.size(); ++l)
      for (double v : cache.z[l].data) bits.push_back(v > 0.0);
    return bits;
  };
  const auto base_pattern = relu_pattern(model);

  GradientCheck result;
  TraceClassifier probe = model;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + step;
    const double up = loss(probe, standardized, labels);
    const bool kink_up = relu_pattern(probe) != base_pattern;
    param = saved - step;
    const double down = loss(probe, standardized, labels);
    const bool kink_down = relu_pattern(probe) != base_pattern;
    param = saved;
    if (kink_up || kink_down) {
      ++result.parameters_skipped;
      return;
    }
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-7});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(grad - numeric) / denom);
    ++result.parameters_checked;
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (std::size_t i = 0; i < layer.weights.data.size(); ++i)
      check(layer.weights.data[i], analytic.layers[l].weights.data[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      check(layer.bias[i], analytic.layers[l].bias[i]);
  }
  return result;
}

std::string model_to_json(const TraceClassifier& model) {
  const auto& cfg = model.config();
  nlohmann::ordered_json j;
  j["format"] = "tracepred-model";
  j["version"] = 1;
  nlohmann::ordered_json c;
  c["hidden_layers"] = cfg.hidden_layers;
  c["activation"] = cfg.activation;
  c["max_iterations"] = cfg.max_iterations;
  c["learning_rate"] = cfg.learning_rate;
  c["adam_beta1"] = cfg.adam_beta1;
  c["adam_beta2"] = cfg.adam_beta2;
  c["adam_epsilon"] = cfg.adam_epsilon;
  c["batch_size"] = cfg.batch_size;
  c["classification_threshold"] = cfg.classification_threshold;
  c["undersample_negatives"] = cfg.undersample_negatives
                                   ? nlohmann::ordered_json(*cfg.undersample_negatives)
                                   : nlohmann::ordered_json(nullptr);
  c["seed"] = cfg.seed;
  j["config"] = std::move(c);
  j["columns"] = model.columns();
  j["feature_mean"] = model.feature_mean();
  j["feature_scale"] = model.feature_scale();
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : model.layers()) {
    nlohmann::ordered_json lj;
    lj["rows"] = l.weights.rows;
    lj["cols"] = l.weights.cols;
    lj["weights"] = l.weights.data;
    lj["bias"] = l.bias;
    layers.push_back(std::move(lj));
  }
  return j.dump(1) + "\n";
}

TraceClassifier model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  try {
    if (j.at("format") != "tracepred-model" || j.at("version") != 1)
      throw ParseError("model: unsupported format or version");
    const auto& c = j.at("config");
    NetConfig cfg;
    cfg.hidden_layers = c.at("hidden_layers").get<std::vector<int>>();
    cfg.activation = c.at("activation").get<std::string>();
    cfg.max_iterations = c.at("max_iterations").get<int>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.adam_beta1 = c.at("adam_beta1").get<double>();
    cfg.adam_beta2 = c.at("adam_beta2").get<double>();
    cfg.adam_epsilon = c.at("adam_epsilon").get<double>();
    cfg.batch_size = c.at("batch_size").get<std::size_t>();
    cfg.classification_threshold = c.at("classification_threshold").get<double>();
    if (!c.at("undersample_negatives").is_null())
      cfg.undersample_negatives = c.at("undersample_negatives").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();

    const auto mean = j.at("feature_mean").get<std::vector<double>>();
    TraceClassifier model = TraceClassifier::initialise(mean.size(), cfg);
    model.set_standardizer(mean, j.at("feature_scale").get<std::vector<double>>());
    model.set_columns(j.at("columns").get<std::vector<std::size_t>>());
    const auto& lj = j.at("layers");
    if (lj.size() != model.layers().size()) throw ParseError("model: layer count mismatch");
    for (std::size_t l = 0; l < lj.size(); ++l) {
      auto& layer = model.layers()[l];
      if (lj[l].at("rows").get<std::size_t>() != layer.weights.rows ||
          lj[l].at("cols").get<std::size_t>() != layer.weights.cols)
        throw ParseError("model: layer " + std::to_string(l) + " shape mismatch");
      layer.weights.data = lj[l].at("weights").get<std::vector<double>>();
      layer.bias = lj[l].at("bias").get<std::vector<double>>();
      if (layer.weights.data.size() != layer.weights.rows * layer.weights.cols ||
          layer.bias.size() != layer.weights.rows)
        throw ParseError("model: layer " + std::to_string(l) + " size mismatch");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

void save_model(const TraceClassifier& model, const std::filesystem::path& path) {
  write_file(path, model_to_json(model));
}

TraceClassifier load_model(const std::filesystem::path& path) {
  return model_from_json(read_file(path));
}

}  // namespace tracepred
