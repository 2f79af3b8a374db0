#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pqfl/envelope.hpp"

namespace pqfl::learning {

/// Labeled samples, row-major features. Every class in [0, n_classes) has at
/// least one sample and every feature is finite.
class Dataset {
 public:
  /// Throws DomainError when the invariants do not hold.
  Dataset(std::vector<double> features, std::size_t dim, std::vector<int> labels, int n_classes);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  int n_classes() const noexcept { return n_classes_; }

  std::span<const double> row(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& features() const noexcept { return features_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<double> features_;
  std::size_t dim_;
  std::vector<int> labels_;
  int n_classes_;
};

/// A subset of a Dataset's rows (a client shard, a train/test split). Does not
/// own the dataset.
class DatasetView {
 public:
  DatasetView(const Dataset& data, std::vector<std::size_t> indices);
  /// All rows.
  explicit DatasetView(const Dataset& data);

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t dim() const noexcept { return data_->dim(); }
  int n_classes() const noexcept { return data_->n_classes(); }
  std::span<const double> row(std::size_t k) const { return data_->row(indices_[k]); }
  int label(std::size_t k) const { return data_->label(indices_[k]); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const Dataset& dataset() const noexcept { return *data_; }

 private:
  const Dataset* data_;
  std::vector<std::size_t> indices_;
};

/// Gaussian blobs with unit variance, one center per class. Centers sit on a
/// grid of spacing `class_separation`, so any two are at least that far apart.
/// Sample i has label i mod C. Throws DomainError unless C >= 2, dim >= 2,
/// n_samples >= C and class_separation > 0.
Dataset make_synthetic(std::uint64_t seed, std::size_t n_samples, int n_classes, std::size_t dim,
                       double class_separation);

/// Reads an MNIST-style IDX pair (ubyte images, ubyte labels). Pixels are
/// scaled to [0, 1]; the class count is max(label) + 1.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// label,f0,f1,... one row per sample.
void write_csv(std::ostream& out, const Dataset& data);

/// Deterministic shuffled split; the first `train_fraction` of rows go to train.
std::pair<DatasetView, DatasetView> train_test_split(const Dataset& data, double train_fraction,
                                                      std::uint64_t seed);

/// Client i holds only the classes {(i + j) mod C : 0 <= j < m}.
struct PartitionSpec {
  std::size_t n_clients = 0;
  int m = 0;
  int n_classes = 0;
  std::vector<std::vector<std::size_t>> assignment;  // dataset row indices, ascending

  std::vector<int> classes_of(std::size_t client) const;
};

/// Each class's samples are split evenly, in view order, among the clients that
/// claim it; remainders go to the lowest-index claimants. Throws DomainError
/// unless 1 <= m <= C and n_clients >= 1.
PartitionSpec cycle_m_partition(const DatasetView& data, std::size_t n_clients, int m);
PartitionSpec cycle_m_partition(const Dataset& data, std::size_t n_clients, int m);

/// Per-client class counts, [client][class].
std::vector<std::vector<std::size_t>> class_histogram(const Dataset& data, const PartitionSpec& p);

/// A differentiable training objective. The learner contract: convex and
/// L-smooth in the parameters.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t num_params() const = 0;
  /// Number of samples minibatches are drawn from.
  virtual std::size_t num_samples() const = 0;
  /// Objective over all samples, regularizer included.
  virtual double value(std::span<const double> w) const = 0;
  /// Objective restricted to `batch` (regularizer included); gradient written to `grad`.
  virtual double value_and_gradient(std::span<const double> w, std::span<const std::size_t> batch,
                                    std::span<double> grad) const = 0;

  double full_gradient(std::span<const double> w, std::span<double> grad) const;
};

/// f(w) = ||w - center||^2. Single "sample"; used as an analytic sanity check.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::vector<double> center) : center_(std::move(center)) {}

  std::size_t num_params() const override { return center_.size(); }
  std::size_t num_samples() const override { return 1; }
  double value(std::span<const double> w) const override;
  double value_and_gradient(std::span<const double> w, std::span<const std::size_t> batch,
                            std::span<double> grad) const override;

 private:
  std::vector<double> center_;
};

struct SoftmaxModel {
  int n_classes = 0;
  std::size_t dim = 0;
  double rho = 1e-3;  // L2 strength

  /// C x dim weights (row-major) followed by C biases.
  std::size_t num_params() const noexcept { return static_cast<std::size_t>(n_classes) * (dim + 1); }
  static SoftmaxModel for_dataset(const Dataset& data, double rho = 1e-3);
};

/// Multinomial logistic regression: mean cross-entropy + rho/2 ||w||^2.
class SoftmaxRegression final : public Objective {
 public:
  /// Throws DomainError if the view's dimension or class count differs from the model.
  SoftmaxRegression(DatasetView data, SoftmaxModel model);

  std::size_t num_params() const override { return model_.num_params(); }
  std::size_t num_samples() const override { return data_.size(); }
  double value(std::span<const double> w) const override;
  double value_and_gradient(std::span<const double> w, std::span<const std::size_t> batch,
                            std::span<double> grad) const override;

  const SoftmaxModel& model() const noexcept { return model_; }
  const DatasetView& data() const noexcept { return data_; }

 private:
  DatasetView data_;
  SoftmaxModel model_;
};

enum class StepSchedule { kConstant, kInvSqrt };

struct SGDConfig {
  std::size_t steps = 1;
  double eta0 = 0.5;
  StepSchedule schedule = StepSchedule::kInvSqrt;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Global step index of the first step. The rate at local step s is
  /// eta0 / sqrt(step_offset + s + 1) under kInvSqrt.
  std::size_t step_offset = 0;
  /// Record the full objective after every step.
  bool record_trace = true;

  double rate(std::size_t step) const;
};

struct SgdResult {
  ParamVector params;
  std::vector<double> loss_trace;
  double max_gradient_norm = 0.0;
};

/// Minibatch SGD. Batches walk a shuffled permutation of the samples and
/// reshuffle after each pass. Throws DomainError for steps == 0, eta0 <= 0,
/// batch_size == 0 or a size mismatch, and TrainingError if the loss stops
/// being finite.
SgdResult local_sgd(const ParamVector& initial, const Objective& objective, const SGDConfig& config);
SgdResult local_sgd(const ParamVector& initial, const DatasetView& shard, const SoftmaxModel& model,
                    const SGDConfig& config);

struct Evaluation {
  double loss = 0.0;      // mean cross-entropy + rho/2 ||w||^2
  double accuracy = 0.0;  // argmax, ties to the lowest class
};

/// Throws DomainError on a parameter-count mismatch or an empty view.
Evaluation evaluate(const ParamVector& params, const DatasetView& data, const SoftmaxModel& model);
Evaluation evaluate(const ParamVector& params, const Dataset& data, const SoftmaxModel& model);

struct ConvergenceReport {
  std::vector<double> loss_trace;
  double fitted_exponent = 0.0;
  double optimum_estimate = 0.0;
  std::size_t fit_begin = 0;  // first trace index of the fit window
  double gradient_bound_B = 0.0;
  double smoothness_estimate_L = 0.0;
};

/// Least-squares slope of log(f_t - f*) against log t (t = index + 1) over the
/// trailing half of the trace. Throws DomainError for traces shorter than 64
/// and FitError when a gap in the window is not positive.
ConvergenceReport fit_convergence(std::span<const double> loss_trace, double optimum_estimate);

/// Max ||grad f(x) - grad f(y)|| / ||x - y|| over `pairs` random pairs with
/// N(0, scale^2) coordinates.
double estimate_smoothness(const Objective& objective, std::uint64_t seed, std::size_t pairs = 200,
                           double scale = 1.0);

/// Accelerated full-batch gradient descent with backtracking and restarts.
/// Returns the minimizer reached after at most `max_iterations`.
ParamVector minimize_full_batch(const Objective& objective, const ParamVector& initial,
                                std::size_t max_iterations = 20000, double gradient_tolerance = 1e-10);

/// fit_convergence plus B (largest gradient norm SGD observed) and an L estimate.
ConvergenceReport analyze_convergence(const Objective& objective, const SgdResult& run,
                                      double optimum_estimate, std::uint64_t seed);

}  // namespace pqfl::learning
