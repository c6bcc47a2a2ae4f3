#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nectar/graph.hpp"
#include "nectar/metrics.hpp"
#include "nectar/objectives.hpp"

namespace nectar {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One labeled network as seen by the learner.
struct Sample {
  FeatureVector features;
  ObjectiveKind label = ObjectiveKind::kQE;
  double weight = 1.0;
};

enum class LearnerKind { kExtraTrees, kRandomForest };

std::string_view to_string(LearnerKind kind);
std::optional<LearnerKind> parse_learner_kind(std::string_view name);

struct Hyperparams {
  LearnerKind learner = LearnerKind::kExtraTrees;
  int n_estimators = 300;
  int max_depth = 40;
  int min_samples_split = 2;
  int min_samples_leaf = 2;

  friend auto operator<=>(const Hyperparams&, const Hyperparams&) = default;
};

// Throws std::invalid_argument unless every value is one of the tested
// values listed for the learner.
void validate_hyperparams(const Hyperparams& params);

// Cartesian product of per-parameter value lists, in lexicographic order.
struct HyperparamGrid {
  std::vector<LearnerKind> learners{LearnerKind::kExtraTrees};
  std::vector<int> n_estimators{300};
  std::vector<int> max_depth{40};
  std::vector<int> min_samples_split{2};
  std::vector<int> min_samples_leaf{2};

  std::vector<Hyperparams> expand() const;
};

// Grid file: one "key v1,v2,..." line per parameter, '#' comments.
// Keys: learner, n_estimators, max_depth, min_samples_split,
// min_samples_leaf. Missing keys keep their defaults.
HyperparamGrid read_grid(const std::filesystem::path& path);

struct TreeNode {
  // Internal node when left >= 0: x[feature] <= threshold goes left.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p_qe = 0.0;
  double p_wocc = 0.0;

  bool is_leaf() const { return left < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_wocc(const std::array<double, FeatureVector::kSize>& x) const;
};

struct ModelEnsemble {
  MetricKind metric = MetricKind::kAverage;
  Hyperparams params;
  std::vector<DecisionTree> trees;
  std::uint64_t train_fingerprint = 0;

  // Checks feature indices, child links and leaf probabilities.
  void validate() const;
};

struct Prediction {
  ObjectiveKind kind = ObjectiveKind::kQE;
  double p_wocc = 0.0;
};

struct TrainOptions {
  bool use_weights = true;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Order-independent hash of the distinct training rows.
std::uint64_t fingerprint(std::span<const Sample> rows);

// Duplicates minority rows up to exact class parity: whole copies first,
// the remainder drawn without replacement from the seeded generator.
std::vector<Sample> oversample(std::span<const Sample> rows, std::uint64_t seed);

// Fits an ensemble. Throws std::invalid_argument on empty or single-class
// input. When every weight is zero the fit falls back to unit weights and
// `warning` (if given) is set.
ModelEnsemble train(std::span<const Sample> rows, MetricKind metric,
                    const Hyperparams& params, const TrainOptions& options,
                    std::string* warning = nullptr);

// Averages leaf probabilities; WOCC iff P(WOCC) > 0.5.
Prediction predict(const ModelEnsemble& model, const FeatureVector& features);

struct EvalReport {
  double balanced_accuracy = 0.0;
  std::optional<double> recall_qe;
  std::optional<double> recall_wocc;
  bool weighted = false;
  std::vector<double> fold_scores;
  double fold_stddev = 0.0;
};

// Recall per class from (prediction, truth, weight) triples, BA over the
// classes present.
EvalReport evaluate_predictions(std::span<const ObjectiveKind> predicted,
                                std::span<const Sample> rows, bool weighted);

EvalReport evaluate(const ModelEnsemble& model, std::span<const Sample> rows,
                    bool weighted);

// Stratified k-fold assignment: fold index per row.
std::vector<int> stratified_folds(std::span<const Sample> rows, int folds,
                                  std::uint64_t seed);

struct CrossValidationResult {
  Hyperparams best;
  double best_mean = 0.0;
  std::vector<EvalReport> fold_reports;  // for the best grid point
  EvalReport summary;                    // mean BA, fold scores and stddev
  std::vector<std::pair<Hyperparams, double>> grid_scores;
};

// 5-fold stratified search; ties go to the smallest hyperparameters.
// Throws std::invalid_argument with fewer than 10 rows or fewer than 2 rows
// of either class.
CrossValidationResult cross_validate(std::span<const Sample> rows,
                                     const HyperparamGrid& grid,
                                     const TrainOptions& options, int folds = 5);

struct FeatureGain {
  std::string_view feature;
  double gain = 0.0;
  double min = 0.0;
  double max = 0.0;
  // Per bin: {QE count, WOCC count}.
  std::vector<std::pair<std::size_t, std::size_t>> histogram;
};

double label_entropy(std::span<const Sample> rows);

// Equal-width binning over the observed range; IG = H(label) - H(label|bin).
std::vector<FeatureGain> information_gain(std::span<const Sample> rows, int bins);

// Versioned text format; round-trips exactly.
void write_model(std::ostream& out, const ModelEnsemble& model);
void save_model(const std::filesystem::path& path, const ModelEnsemble& model,
                std::string_view header = {});
ModelEnsemble read_model(std::istream& in);
ModelEnsemble load_model(const std::filesystem::path& path);

}  // namespace nectar
