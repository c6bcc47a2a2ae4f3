#include "nectar/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nectar/parallel.hpp"
#include "nectar/rng.hpp"

namespace nectar {

namespace {

constexpr int kNumFeatures = static_cast<int>(FeatureVector::kSize);

// Tested values per learner.
constexpr int kEstimatorGrid[] = {100, 200, 250, 300, 350, 400};
constexpr int kDepthGrid[] = {3, 4, 5, 8, 10, 15, 20, 25, 30, 35, 40};
constexpr int kSplitGrid[] = {2, 3, 4, 5, 10};
constexpr int kLeafGrid[] = {2, 3, 5, 10};

template <std::size_t N>
bool in_grid(const int (&grid)[N], int value) {
  return std::find(std::begin(grid), std::end(grid), value) != std::end(grid);
}

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw ModelError("malformed number '" + std::string(s) + "'");
  }
  return x;
}

int parse_int(std::string_view s) {
  int x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("malformed integer '" + std::string(s) + "'");
  }
  return x;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double gini(double w_qe, double w_wocc) {
  const double w = w_qe + w_wocc;
  if (w <= 0.0) return 0.0;
  const double a = w_qe / w, b = w_wocc / w;
  return 1.0 - a * a - b * b;
}

struct Row {
  std::array<double, FeatureVector::kSize> x;
  bool wocc;
  double weight;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<Row>& rows, const Hyperparams& params, std::uint64_t seed)
      : rows_(rows), params_(params), rng_(seed) {}

  DecisionTree grow(std::vector<std::size_t> indices) {
    DecisionTree tree;
    tree_ = &tree;
    split(indices, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  int make_leaf(const std::vector<std::size_t>& idx) {
    double w_qe = 0.0, w_wocc = 0.0;
    std::size_t n_wocc = 0;
    for (std::size_t i : idx) {
      (rows_[i].wocc ? w_wocc : w_qe) += rows_[i].weight;
      if (rows_[i].wocc) ++n_wocc;
    }
    TreeNode leaf;
    if (w_qe + w_wocc > 0.0) {
      leaf.p_wocc = w_wocc / (w_qe + w_wocc);
    } else {
      leaf.p_wocc = static_cast<double>(n_wocc) / static_cast<double>(idx.size());
    }
    leaf.p_qe = 1.0 - leaf.p_wocc;
    tree_->nodes.push_back(leaf);
    return static_cast<int>(tree_->nodes.size() - 1);
  }

  // Weighted child impurity of splitting idx at (feature, threshold), or
  // nullopt when a child would be smaller than min_samples_leaf.
  std::optional<double> evaluate(const std::vector<std::size_t>& idx, int feature,
                                 double threshold) const {
    double lq = 0, lw = 0, rq = 0, rw = 0;
    std::size_t nl = 0;
    for (std::size_t i : idx) {
      const Row& r = rows_[i];
      const bool left = r.x[feature] <= threshold;
      if (left) ++nl;
      (left ? (r.wocc ? lw : lq) : (r.wocc ? rw : rq)) += r.weight;
    }
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (nl < min_leaf || idx.size() - nl < min_leaf) return std::nullopt;
    return (lq + lw) * gini(lq, lw) + (rq + rw) * gini(rq, rw);
  }

  std::optional<Split> best_random_split(const std::vector<std::size_t>& idx, int feature) {
    double lo = rows_[idx.front()].x[feature], hi = lo;
    for (std::size_t i : idx) {
      lo = std::min(lo, rows_[i].x[feature]);
      hi = std::max(hi, rows_[i].x[feature]);
    }
    if (!(hi > lo)) return std::nullopt;
    double threshold = rng_.uniform_real(lo, hi);
    if (threshold >= hi) threshold = lo;
    const auto s = evaluate(idx, feature, threshold);
    if (!s) return std::nullopt;
    return Split{feature, threshold, *s};
  }

  std::optional<Split> best_exhaustive_split(const std::vector<std::size_t>& idx,
                                             int feature) {
    std::vector<double> values;
    values.reserve(idx.size());
    for (std::size_t i : idx) values.push_back(rows_[i].x[feature]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::optional<Split> best;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      double threshold = values[k] + (values[k + 1] - values[k]) / 2.0;
      if (!(threshold < values[k + 1])) threshold = values[k];
      const auto s = evaluate(idx, feature, threshold);
      if (s && (!best || *s < best->score)) best = Split{feature, threshold, *s};
    }
    return best;
  }

  int split(const std::vector<std::size_t>& idx, int depth) {
    double w_qe = 0.0, w_wocc = 0.0;
    for (std::size_t i : idx) (rows_[i].wocc ? w_wocc : w_qe) += rows_[i].weight;
    const double parent = (w_qe + w_wocc) * gini(w_qe, w_wocc);

    if (depth >= params_.max_depth ||
        idx.size() < static_cast<std::size_t>(params_.min_samples_split) ||
        idx.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf) ||
        parent <= 0.0) {
      return make_leaf(idx);
    }

    // Visit features in random order; evaluate at least max_features of
    // them, continuing until some valid split is found.
    std::vector<int> features(kNumFeatures);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);
    const int max_features =
        std::max(1, static_cast<int>(std::sqrt(static_cast<double>(kNumFeatures))));
    std::optional<Split> best;
    int visited = 0;
    for (int f : features) {
      if (visited >= max_features && best) break;
      const auto s = params_.learner == LearnerKind::kExtraTrees
                         ? best_random_split(idx, f)
                         : best_exhaustive_split(idx, f);
      ++visited;
      if (s && (!best || s->score < best->score)) best = s;
    }
    if (!best || !(best->score < parent)) return make_leaf(idx);

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (rows_[i].x[best->feature] <= best->threshold ? left : right).push_back(i);
    }
    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.push_back({best->feature, best->threshold, -1, -1, 0.0, 0.0});
    const int l = split(left, depth + 1);
    const int r = split(right, depth + 1);
    tree_->nodes[id].left = l;
    tree_->nodes[id].right = r;
    return id;
  }

  const std::vector<Row>& rows_;
  const Hyperparams& params_;
  Rng rng_;
  DecisionTree* tree_ = nullptr;
};

std::pair<std::size_t, std::size_t> class_counts(std::span<const Sample> rows) {
  std::size_t qe = 0, wocc = 0;
  for (const auto& r : rows) (r.label == ObjectiveKind::kWOCC ? wocc : qe) += 1;
  return {qe, wocc};
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::kExtraTrees ? "extra_trees" : "random_forest";
}

std::optional<LearnerKind> parse_learner_kind(std::string_view name) {
  if (name == "extra_trees" || name == "et") return LearnerKind::kExtraTrees;
  if (name == "random_forest" || name == "rf") return LearnerKind::kRandomForest;
  return std::nullopt;
}

void validate_hyperparams(const Hyperparams& p) {
  if (!in_grid(kEstimatorGrid, p.n_estimators)) {
    throw std::invalid_argument("n_estimators " + std::to_string(p.n_estimators) +
                                " is not a tested value");
  }
  if (!in_grid(kDepthGrid, p.max_depth)) {
    throw std::invalid_argument("max_depth " + std::to_string(p.max_depth) +
                                " is not a tested value");
  }
  if (!in_grid(kSplitGrid, p.min_samples_split)) {
    throw std::invalid_argument("min_samples_split " + std::to_string(p.min_samples_split) +
                                " is not a tested value");
  }
  if (!in_grid(kLeafGrid, p.min_samples_leaf)) {
    throw std::invalid_argument("min_samples_leaf " + std::to_string(p.min_samples_leaf) +
                                " is not a tested value");
  }
}

std::vector<Hyperparams> HyperparamGrid::expand() const {
  std::vector<Hyperparams> out;
  for (LearnerKind l : learners)
    for (int e : n_estimators)
      for (int d : max_depth)
        for (int s : min_samples_split)
          for (int f : min_samples_leaf) out.push_back({l, e, d, s, f});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HyperparamGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file: " + path.string());
  HyperparamGrid grid;
  std::string line, key, list;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    if (!(fields >> key >> list)) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": expected '<key> <v1,v2,...>'");
    }
    std::vector<std::string> values;
    std::stringstream parts(list);
    for (std::string v; std::getline(parts, v, ',');) {
      if (!v.empty()) values.push_back(v);
    }
    auto ints = [&] {
      std::vector<int> out;
      for (const auto& v : values) out.push_back(parse_int(v));
      return out;
    };
    if (key == "learner") {
      grid.learners.clear();
      for (const auto& v : values) {
        const auto k = parse_learner_kind(v);
        if (!k) throw std::invalid_argument("unknown learner '" + v + "'");
        grid.learners.push_back(*k);
      }
    } else if (key == "n_estimators") {
      grid.n_estimators = ints();
    } else if (key == "max_depth") {
      grid.max_depth = ints();
    } else if (key == "min_samples_split") {
      grid.min_samples_split = ints();
    } else if (key == "min_samples_leaf") {
      grid.min_samples_leaf = ints();
    } else {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
  }
  return grid;
}

double DecisionTree::predict_wocc(const std::array<double, FeatureVector::kSize>& x) const {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
  }
  return nodes[id].p_wocc;
}

void ModelEnsemble::validate() const {
  if (trees.empty()) throw ModelError("model has no trees");
  if (static_cast<int>(trees.size()) != params.n_estimators) {
    throw ModelError("tree count does not match n_estimators");
  }
  for (const auto& tree : trees) {
    const int n = static_cast<int>(tree.nodes.size());
    if (n == 0) throw ModelError("empty tree");
    for (int id = 0; id < n; ++id) {
      const TreeNode& node = tree.nodes[id];
      if (node.is_leaf()) {
        if (!(std::fabs(node.p_qe + node.p_wocc - 1.0) <= 1e-9) || node.p_qe < 0.0 ||
            node.p_wocc < 0.0) {
          throw ModelError("leaf probabilities must be non-negative and sum to 1");
        }
      } else {
        if (node.feature < 0 || node.feature >= kNumFeatures) {
          throw ModelError("feature index out of range");
        }
        // Children always follow their parent, which rules out cycles.
        if (node.left <= id || node.left >= n || node.right <= id || node.right >= n) {
          throw ModelError("invalid child link");
        }
      }
    }
  }
}

std::uint64_t fingerprint(std::span<const Sample> rows) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(rows.size());
  for (const auto& r : rows) {
    std::string text;
    for (double x : r.features.as_array()) text += format_double(x) + ",";
    text += to_string(r.label);
    text += "," + format_double(r.weight);
    hashes.push_back(fnv1a(text));
  }
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint64_t x : hashes) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&x), sizeof x), h);
  }
  return h;
}

std::vector<Sample> oversample(std::span<const Sample> rows, std::uint64_t seed) {
  std::vector<std::size_t> qe, wocc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (rows[i].label == ObjectiveKind::kWOCC ? wocc : qe).push_back(i);
  }
  std::vector<Sample> out(rows.begin(), rows.end());
  if (qe.empty() || wocc.empty() || qe.size() == wocc.size()) return out;
  const auto& minority = qe.size() < wocc.size() ? qe : wocc;
  const std::size_t deficit = std::max(qe.size(), wocc.size()) - minority.size();
  for (std::size_t k = 0; k < deficit / minority.size(); ++k) {
    for (std::size_t i : minority) out.push_back(rows[i]);
  }
  std::vector<std::size_t> pool = minority;
  Rng rng(seed);
  rng.shuffle(pool);
  for (std::size_t k = 0; k < deficit % minority.size(); ++k) out.push_back(rows[pool[k]]);
  return out;
}

ModelEnsemble train(std::span<const Sample> rows, MetricKind metric,
                    const Hyperparams& params, const TrainOptions& options,
                    std::string* warning) {
  if (rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  const auto [n_qe, n_wocc] = class_counts(rows);
  if (n_qe == 0 || n_wocc == 0) {
    throw std::invalid_argument("training data must contain both classes");
  }
  validate_hyperparams(params);

  const std::vector<Sample> balanced = oversample(rows, derive_seed(options.seed, 0));
  bool weighted = options.use_weights;
  if (weighted && std::all_of(balanced.begin(), balanced.end(),
                              [](const Sample& s) { return s.weight <= 0.0; })) {
    weighted = false;
    if (warning) *warning = "all sample weights are zero; training unweighted";
  }
  std::vector<Row> data;
  data.reserve(balanced.size());
  for (const auto& s : balanced) {
    data.push_back({s.features.as_array(), s.label == ObjectiveKind::kWOCC,
                    weighted ? std::max(0.0, s.weight) : 1.0});
  }

  ModelEnsemble model;
  model.metric = metric;
  model.params = params;
  model.train_fingerprint = fingerprint(rows);
  model.trees.resize(static_cast<std::size_t>(params.n_estimators));
  parallel_for(model.trees.size(), options.workers, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(options.seed, t + 1);
    std::vector<std::size_t> idx(data.size());
    if (params.learner == LearnerKind::kRandomForest) {
      Rng boot(derive_seed(tree_seed, 0));
      for (auto& i : idx) i = static_cast<std::size_t>(boot.uniform(data.size()));
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    model.trees[t] = TreeGrower(data, params, tree_seed).grow(std::move(idx));
  });
  return model;
}

Prediction predict(const ModelEnsemble& model, const FeatureVector& features) {
  const auto x = features.as_array();
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict_wocc(x);
  Prediction p;
  p.p_wocc = model.trees.empty() ? 0.0 : sum / static_cast<double>(model.trees.size());
  p.kind = p.p_wocc > 0.5 ? ObjectiveKind::kWOCC : ObjectiveKind::kQE;
  return p;
}

EvalReport evaluate_predictions(std::span<const ObjectiveKind> predicted,
                                std::span<const Sample> rows, bool weighted) {
  if (predicted.size() != rows.size()) {
    throw std::invalid_argument("prediction count does not match row count");
  }
  double hit[2] = {0, 0}, total[2] = {0, 0};
  std::size_t present[2] = {0, 0};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int cls = rows[i].label == ObjectiveKind::kWOCC ? 1 : 0;
    const double w = weighted ? rows[i].weight : 1.0;
    ++present[cls];
    total[cls] += w;
    if (predicted[i] == rows[i].label) hit[cls] += w;
  }
  EvalReport report;
  report.weighted = weighted;
  if (present[0] > 0 && total[0] > 0.0) report.recall_qe = hit[0] / total[0];
  if (present[1] > 0 && total[1] > 0.0) report.recall_wocc = hit[1] / total[1];
  if (report.recall_qe && report.recall_wocc) {
    report.balanced_accuracy = (*report.recall_qe + *report.recall_wocc) / 2.0;
  } else if (report.recall_qe) {
    report.balanced_accuracy = *report.recall_qe;
  } else if (report.recall_wocc) {
    report.balanced_accuracy = *report.recall_wocc;
  }
  return report;
}

EvalReport evaluate(const ModelEnsemble& model, std::span<const Sample> rows,
                    bool weighted) {
  std::vector<ObjectiveKind> predicted;
  predicted.reserve(rows.size());
  for (const auto& r : rows) predicted.push_back(predict(model, r.features).kind);
  return evaluate_predictions(predicted, rows, weighted);
}

std::vector<int> stratified_folds(std::span<const Sample> rows, int folds,
                                  std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    by_class[rows[i].label == ObjectiveKind::kWOCC ? 1 : 0].push_back(i);
  }
  std::vector<int> fold(rows.size(), 0);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t i : members) {
      fold[i] = static_cast<int>(next % static_cast<std::size_t>(folds));
      ++next;
    }
  }
  return fold;
}

CrossValidationResult cross_validate(std::span<const Sample> rows,
                                     const HyperparamGrid& grid,
                                     const TrainOptions& options, int folds) {
  const auto [n_qe, n_wocc] = class_counts(rows);
  if (rows.size() < 10 || n_qe < 2 || n_wocc < 2) {
    throw std::invalid_argument(
        "cross-validation needs at least 10 rows and 2 rows of each class");
  }
  const std::vector<Hyperparams> points = grid.expand();
  if (points.empty()) throw std::invalid_argument("empty hyperparameter grid");
  for (const auto& p : points) validate_hyperparams(p);

  const std::vector<int> fold = stratified_folds(rows, folds, options.seed);
  std::vector<std::vector<EvalReport>> reports(points.size(),
                                               std::vector<EvalReport>(folds));

  // Each (grid point, fold) job is independent and seeded by its fold.
  const std::size_t jobs = points.size() * static_cast<std::size_t>(folds);
  parallel_for(jobs, options.workers, [&](std::size_t job) {
    const std::size_t p = job / static_cast<std::size_t>(folds);
    const int f = static_cast<int>(job % static_cast<std::size_t>(folds));
    std::vector<Sample> train_rows, test_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (fold[i] == f ? test_rows : train_rows).push_back(rows[i]);
    }
    TrainOptions fold_options = options;
    fold_options.seed = derive_seed(options.seed, static_cast<std::uint64_t>(f) + 1);
    fold_options.workers = 1;
    const ModelEnsemble model = train(train_rows, MetricKind::kAverage, points[p], fold_options);
    reports[p][f] = evaluate(model, test_rows, false);
  });

  CrossValidationResult result;
  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> scores;
    for (const auto& r : reports[p]) scores.push_back(r.balanced_accuracy);
    const double mu = mean(scores);
    result.grid_scores.emplace_back(points[p], mu);
    if (mu > best_mean) {
      best_mean = mu;
      best = p;
    }
  }
  result.best = points[best];
  result.best_mean = best_mean;
  result.fold_reports = reports[best];
  for (const auto& r : result.fold_reports) {
    result.summary.fold_scores.push_back(r.balanced_accuracy);
  }
  result.summary.balanced_accuracy = best_mean;
  result.summary.fold_stddev = stddev(result.summary.fold_scores);
  std::vector<double> rq, rw;
  for (const auto& r : result.fold_reports) {
    if (r.recall_qe) rq.push_back(*r.recall_qe);
    if (r.recall_wocc) rw.push_back(*r.recall_wocc);
  }
  if (!rq.empty()) result.summary.recall_qe = mean(rq);
  if (!rw.empty()) result.summary.recall_wocc = mean(rw);
  return result;
}

double label_entropy(std::span<const Sample> rows) {
  const auto [qe, wocc] = class_counts(rows);
  const double n = static_cast<double>(rows.size());
  double h = 0.0;
  for (std::size_t c : {qe, wocc}) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

std::vector<FeatureGain> information_gain(std::span<const Sample> rows, int bins) {
  if (rows.empty()) throw std::invalid_argument("information gain needs rows");
  if (bins < 2) throw std::invalid_argument("bins must be >= 2");
  const double h_label = label_entropy(rows);
  const double n = static_cast<double>(rows.size());

  std::vector<FeatureGain> out;
  for (int f = 0; f < kNumFeatures; ++f) {
    FeatureGain g;
    g.feature = kFeatureNames[static_cast<std::size_t>(f)];
    g.min = g.max = rows.front().features.as_array()[f];
    for (const auto& r : rows) {
      const double x = r.features.as_array()[f];
      g.min = std::min(g.min, x);
      g.max = std::max(g.max, x);
    }
    if (!(g.max > g.min)) {
      const auto [qe, wocc] = class_counts(rows);
      g.histogram.assign(1, {qe, wocc});
      out.push_back(std::move(g));
      continue;
    }
    g.histogram.assign(static_cast<std::size_t>(bins), {0, 0});
    const double width = (g.max - g.min) / bins;
    for (const auto& r : rows) {
      const double x = r.features.as_array()[f];
      auto b = static_cast<int>(std::floor((x - g.min) / width));
      b = std::clamp(b, 0, bins - 1);
      auto& cell = g.histogram[static_cast<std::size_t>(b)];
      (r.label == ObjectiveKind::kWOCC ? cell.second : cell.first) += 1;
    }
    double h_cond = 0.0;
    for (const auto& [qe, wocc] : g.histogram) {
      const double nb = static_cast<double>(qe + wocc);
      if (nb == 0.0) continue;
      double hb = 0.0;
      for (std::size_t c : {qe, wocc}) {
        if (c > 0 && c < qe + wocc) {
          const double p = static_cast<double>(c) / nb;
          hb -= p * std::log2(p);
        }
      }
      h_cond += nb / n * hb;
    }
    g.gain = std::max(0.0, h_label - h_cond);
    out.push_back(std::move(g));
  }
  return out;
}

void write_model(std::ostream& out, const ModelEnsemble& model) {
  out << "nectar-ml-model v1 " << to_string(model.metric) << ' '
      << to_string(model.params.learner) << ' ' << model.params.n_estimators << '\n';
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(model.train_fingerprint));
  out << "params max_depth " << model.params.max_depth << " min_samples_split "
      << model.params.min_samples_split << " min_samples_leaf "
      << model.params.min_samples_leaf << " fingerprint " << fp << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes;
    out << "tree " << t << ' ' << nodes.size() << '\n';
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      const TreeNode& node = nodes[id];
      if (node.is_leaf()) {
        out << "leaf " << id << " p_qe " << format_double(node.p_qe) << " p_wocc "
            << format_double(node.p_wocc) << '\n';
      } else {
        out << "node " << id << " feat " << node.feature << " thr "
            << format_double(node.threshold) << " left " << node.left << " right "
            << node.right << '\n';
      }
    }
    out << "end\n";
  }
}

void save_model(const std::filesystem::path& path, const ModelEnsemble& model,
                std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path.string());
  out << header;
  write_model(out, model);
  if (!out) throw IoError("write failure: " + path.string());
}

ModelEnsemble read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '#') return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> ModelError {
    return ModelError("model line " + std::to_string(line_no) + ": " + what);
  };
  auto expect = [&](std::istringstream& s, std::string_view word) {
    std::string w;
    if (!(s >> w) || w != word) throw fail("expected '" + std::string(word) + "'");
  };
  auto token = [&](std::istringstream& s) {
    std::string w;
    if (!(s >> w)) throw fail("truncated line");
    return w;
  };

  ModelEnsemble model;
  if (!next_line()) throw ModelError("empty model file");
  {
    std::istringstream s(line);
    expect(s, "nectar-ml-model");
    expect(s, "v1");
    const auto metric = parse_metric_kind(token(s));
    if (!metric) throw fail("unknown metric");
    model.metric = *metric;
    const auto learner = parse_learner_kind(token(s));
    if (!learner) throw fail("unknown learner");
    model.params.learner = *learner;
    try {
      model.params.n_estimators = parse_int(token(s));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  if (!next_line()) throw fail("missing params line");
  {
    std::istringstream s(line);
    try {
      expect(s, "params");
      expect(s, "max_depth");
      model.params.max_depth = parse_int(token(s));
      expect(s, "min_samples_split");
      model.params.min_samples_split = parse_int(token(s));
      expect(s, "min_samples_leaf");
      model.params.min_samples_leaf = parse_int(token(s));
      expect(s, "fingerprint");
      model.train_fingerprint = std::stoull(token(s), nullptr, 16);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  for (int t = 0; t < model.params.n_estimators; ++t) {
    if (!next_line()) throw fail("missing tree " + std::to_string(t));
    std::istringstream s(line);
    expect(s, "tree");
    std::size_t count = 0;
    try {
      if (parse_int(token(s)) != t) throw fail("trees out of order");
      count = static_cast<std::size_t>(parse_int(token(s)));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    DecisionTree tree;
    tree.nodes.resize(count);
    std::vector<bool> seen(count, false);
    for (std::size_t k = 0; k < count; ++k) {
      if (!next_line()) throw fail("truncated tree");
      std::istringstream ns(line);
      const std::string kind = token(ns);
      std::size_t id = 0;
      try {
        id = static_cast<std::size_t>(parse_int(token(ns)));
      } catch (const std::invalid_argument& e) {
        throw fail(e.what());
      }
      if (id >= count || seen[id]) throw fail("bad node id");
      seen[id] = true;
      TreeNode& node = tree.nodes[id];
      try {
        if (kind == "leaf") {
          expect(ns, "p_qe");
          node.p_qe = parse_double(token(ns));
          expect(ns, "p_wocc");
          node.p_wocc = parse_double(token(ns));
        } else if (kind == "node") {
          expect(ns, "feat");
          node.feature = parse_int(token(ns));
          expect(ns, "thr");
          node.threshold = parse_double(token(ns));
          expect(ns, "left");
          node.left = parse_int(token(ns));
          expect(ns, "right");
          node.right = parse_int(token(ns));
        } else {
          throw fail("unknown record '" + kind + "'");
        }
      } catch (const std::invalid_argument& e) {
        throw fail(e.what());
      }
    }
    if (!next_line() || line.find("end") == std::string::npos) throw fail("expected 'end'");
    model.trees.push_back(std::move(tree));
  }
  model.validate();
  return model;
}

ModelEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path.string());
  return read_model(in);
}

}  // namespace nectar
