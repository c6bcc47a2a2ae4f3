#include "nectar/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nectar/classifier.hpp"
#include "nectar/dataset.hpp"
#include "nectar/engine.hpp"
#include "nectar/metrics.hpp"
#include "nectar/report.hpp"

namespace nectar::cli {

namespace {

struct Globals {
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  bool quiet = false;
};

// Flags given on the command line, in declaration order. Scheduling and
// verbosity flags are left out so they cannot change output bytes.
RunManifest manifest_for(const CLI::App& sub, const Globals& globals,
                         std::vector<std::string> inputs) {
  RunManifest m;
  m.subcommand = sub.get_name();
  m.seed = globals.seed;
  m.inputs = std::move(inputs);
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_single_name();
    if (name == "help") continue;
    std::string value;
    for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    m.flags.emplace_back(name, value);
  }
  return m;
}

void write_text(const std::string& path, const std::string& header, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << header << body;
  if (!out) throw IoError("write failure: " + path);
}

std::vector<double> parse_betas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream parts(csv);
  for (std::string item; std::getline(parts, item, ',');) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw std::invalid_argument("bad beta value '" + item + "'");
    out.push_back(x);
  }
  return out;
}

std::string recall_text(const std::optional<double>& r) {
  return r ? format_score(*r) : "---";
}

MetricKind metric_from(const std::string& name) {
  const auto m = parse_metric_kind(name);
  if (!m) throw std::invalid_argument("unknown metric '" + name + "'");
  return *m;
}

}  // namespace

int main(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Overlapping community detection with learned objective selection",
               "nectar-ml"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--quiet", g.quiet, "Suppress summaries on stdout");

  // detect
  auto* detect = app.add_subcommand("detect", "Run the detection engine on a graph");
  std::string d_graph, d_output, d_objective = "threshold", d_model;
  EngineConfig d_config;
  detect->add_option("--graph", d_graph)->required();
  detect->add_option("--beta", d_config.beta);
  detect->add_option("--alpha", d_config.alpha);
  detect->add_option("--max-iter", d_config.max_iter);
  detect->add_option("--objective", d_objective)
      ->check(CLI::IsMember({"qe", "wocc", "threshold", "model"}));
  detect->add_option("--tr-rate", d_config.tr_rate);
  detect->add_option("--model", d_model);
  detect->add_option("--output", d_output)->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a cover against ground truth");
  std::string e_cover, e_truth, e_graph, e_output, e_format = "tsv";
  bool e_best_match = false;
  evaluate_cmd->add_option("--detected", e_cover)->required();
  evaluate_cmd->add_option("--truth", e_truth)->required();
  evaluate_cmd->add_option("--graph", e_graph)->required();
  evaluate_cmd->add_flag("--best-match", e_best_match);
  evaluate_cmd->add_option("--format", e_format)->check(CLI::IsMember({"csv", "tsv"}));
  evaluate_cmd->add_option("--output", e_output);

  // prune
  auto* prune_cmd = app.add_subcommand("prune", "Drop nodes outside the listed communities");
  std::string p_truth, p_graph, p_out_graph, p_out_truth;
  std::optional<std::size_t> p_top;
  prune_cmd->add_option("--truth", p_truth)->required();
  prune_cmd->add_option("--graph", p_graph)->required();
  prune_cmd->add_option("--top", p_top);
  prune_cmd->add_option("--out-graph", p_out_graph)->required();
  prune_cmd->add_option("--out-truth", p_out_truth)->required();

  // label
  auto* label = app.add_subcommand("label", "Label networks listed in a manifest");
  std::string l_manifest, l_betas, l_out;
  BuildOptions l_options;
  label->add_option("--manifest", l_manifest)->required();
  label->add_option("--betas", l_betas);
  label->add_option("--alpha", l_options.label.engine.alpha);
  label->add_option("--max-iter", l_options.label.engine.max_iter);
  label->add_option("--split-threshold", l_options.split_threshold);
  label->add_flag("--best-match", l_options.label.use_best_match);
  label->add_option("--out", l_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Cross-validate and fit a selector model");
  std::string t_dataset, t_metric = "average", t_grid, t_out, t_split = "train";
  int t_folds = 5;
  bool t_unweighted = false;
  train_cmd->add_option("--dataset", t_dataset)->required();
  train_cmd->add_option("--metric", t_metric)
      ->check(CLI::IsMember({"onmi", "omega", "avgf1", "average"}));
  train_cmd->add_option("--grid", t_grid);
  train_cmd->add_option("--folds", t_folds)->check(CLI::Range(2, 100));
  train_cmd->add_option("--split", t_split)->check(CLI::IsMember({"train", "test", "all"}));
  train_cmd->add_flag("--unweighted-train", t_unweighted);
  train_cmd->add_option("--out", t_out)->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict the objective for a graph");
  std::string pr_model, pr_graph;
  predict_cmd->add_option("--model", pr_model)->required();
  predict_cmd->add_option("--graph", pr_graph)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Balanced accuracy of a model on a dataset");
  std::string ev_model, ev_dataset, ev_split = "all";
  bool ev_weighted = false;
  eval_cmd->add_option("--model", ev_model)->required();
  eval_cmd->add_option("--dataset", ev_dataset)->required();
  eval_cmd->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test", "all"}));
  eval_cmd->add_flag("--weighted", ev_weighted);

  // feature-ig
  auto* ig_cmd = app.add_subcommand("feature-ig", "Information gain per feature");
  std::string ig_dataset, ig_metric = "average", ig_out;
  int ig_bins = 20;
  ig_cmd->add_option("--dataset", ig_dataset)->required();
  ig_cmd->add_option("--metric", ig_metric)
      ->check(CLI::IsMember({"onmi", "omega", "avgf1", "average"}));
  ig_cmd->add_option("--bins", ig_bins);
  ig_cmd->add_option("--out", ig_out);

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Model versus threshold selector");
  std::string c_dataset, c_model, c_out, c_rows;
  double c_tr_rate = 5.0;
  compare_cmd->add_option("--dataset", c_dataset)->required();
  compare_cmd->add_option("--model", c_model)->required();
  compare_cmd->add_option("--tr-rate", c_tr_rate);
  compare_cmd->add_option("--out", c_out)->required();
  compare_cmd->add_option("--rows", c_rows);

  // generate
  auto* generate = app.add_subcommand("generate", "Planted-overlap test networks");
  std::string gen_dir, gen_graph, gen_truth;
  std::size_t gen_count = 40, gen_n = 100, gen_communities = 4;
  double gen_overlap = 0.1, gen_p_in = 0.5, gen_p_out = 0.02;
  generate->add_option("--corpus-dir", gen_dir, "Write a toy corpus and its manifest");
  generate->add_option("--count", gen_count);
  generate->add_option("--n", gen_n);
  generate->add_option("--communities", gen_communities);
  generate->add_option("--overlap", gen_overlap);
  generate->add_option("--p-in", gen_p_in);
  generate->add_option("--p-out", gen_p_out);
  generate->add_option("--graph", gen_graph);
  generate->add_option("--truth", gen_truth);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (detect->parsed()) {
      const Graph graph = load_edge_list(d_graph);
      d_config.rng_seed = g.seed;
      d_config.mode = d_objective == "qe"     ? ObjectiveMode::kForceQE
                      : d_objective == "wocc" ? ObjectiveMode::kForceWOCC
                      : d_objective == "model" ? ObjectiveMode::kModel
                                               : ObjectiveMode::kThreshold;
      d_config.validate();
      std::optional<ModelEnsemble> model;
      std::vector<std::string> inputs{d_graph};
      if (d_config.mode == ObjectiveMode::kModel) {
        if (d_model.empty()) throw std::invalid_argument("--objective model needs --model");
        model = load_model(d_model);
        inputs.push_back(d_model);
      }
      const RunResult r = run(graph, d_config, model ? &*model : nullptr);
      write_cover(d_output, r.cover, graph, manifest_for(*detect, g, inputs).header());
      if (!g.quiet) {
        out << "objective\t" << to_string(r.objective_chosen) << "\n"
            << "communities\t" << r.cover.num_communities() << "\n"
            << "iterations\t" << r.iterations_used << "\n"
            << "converged\t" << (r.converged ? "yes" : "no") << "\n"
            << "objective_value\t" << format_score(r.objective_value) << "\n";
      }
    } else if (evaluate_cmd->parsed()) {
      const Graph graph = load_edge_list(e_graph);
      const Cover cover = read_cover(e_cover, graph);
      const Cover truth = read_cover(e_truth, graph);
      const ScoreReport s = score(cover, truth, e_best_match);
      const char sep = e_format == "csv" ? ',' : '\t';
      std::ostringstream body;
      for (MetricKind m : kAllMetrics) body << to_string(m) << sep;
      body << "onmi_variant\n";
      for (MetricKind m : kAllMetrics) body << format_score(s.get(m)) << sep;
      body << s.onmi_variant << '\n';
      if (!e_output.empty()) {
        write_text(e_output,
                   manifest_for(*evaluate_cmd, g, {e_cover, e_truth, e_graph}).header(),
                   body.str());
      }
      if (!g.quiet) out << body.str();
    } else if (prune_cmd->parsed()) {
      const Graph graph = load_edge_list(p_graph);
      const PruneResult r = prune(graph, read_communities(p_truth), p_top);
      const std::string header = manifest_for(*prune_cmd, g, {p_truth, p_graph}).header();
      write_edge_list(p_out_graph, r.graph, header);
      write_cover(p_out_truth, r.truth, r.graph, header);
      if (!g.quiet) {
        out << "nodes_kept\t" << r.graph.num_nodes() << "\n"
            << "nodes_dropped\t" << r.dropped_nodes << "\n"
            << "unknown_labels\t" << r.unknown_labels << "\n";
      }
    } else if (label->parsed()) {
      const auto records = read_manifest(l_manifest);
      const std::vector<double> betas = l_betas.empty() ? kDefaultBetas : parse_betas(l_betas);
      l_options.workers = g.workers;
      l_options.label.engine.rng_seed = g.seed;
      l_options.label.engine.validate();
      const auto rows = build_rows(records, betas, l_options);
      write_dataset(l_out, rows, manifest_for(*label, g, {l_manifest}).header());
      const auto failed = static_cast<std::size_t>(
          std::count_if(rows.begin(), rows.end(), [](const DatasetRow& r) { return !r.ok(); }));
      for (const auto& r : rows) {
        if (!r.ok() && r.metric == MetricKind::kONMI) err << r.id << ": " << r.status << "\n";
      }
      if (!g.quiet) {
        out << "networks\t" << records.size() << "\n"
            << "rows\t" << rows.size() << "\n"
            << "failed_rows\t" << failed << "\n";
      }
    } else if (train_cmd->parsed()) {
      const MetricKind metric = metric_from(t_metric);
      const auto rows = read_dataset(t_dataset);
      const auto samples =
          to_samples(rows, metric,
                     t_split == "all" ? std::nullopt : std::optional<std::string_view>(t_split));
      const HyperparamGrid grid = t_grid.empty() ? HyperparamGrid{} : read_grid(t_grid);
      TrainOptions options;
      options.use_weights = !t_unweighted;
      options.seed = g.seed;
      options.workers = g.workers;
      const CrossValidationResult cv = cross_validate(samples, grid, options, t_folds);
      std::string warning;
      const ModelEnsemble model = train(samples, metric, cv.best, options, &warning);
      if (!warning.empty()) err << "warning: " << warning << "\n";
      std::vector<std::string> inputs{t_dataset};
      if (!t_grid.empty()) inputs.push_back(t_grid);
      save_model(t_out, model, manifest_for(*train_cmd, g, inputs).header());
      if (!g.quiet) {
        const Hyperparams& p = cv.best;
        out << "rows\t" << samples.size() << "\n"
            << "learner\t" << to_string(p.learner) << "\n"
            << "n_estimators\t" << p.n_estimators << "\n"
            << "max_depth\t" << p.max_depth << "\n"
            << "min_samples_split\t" << p.min_samples_split << "\n"
            << "min_samples_leaf\t" << p.min_samples_leaf << "\n"
            << "cv_balanced_accuracy\t" << format_score(cv.summary.balanced_accuracy) << "\n"
            << "cv_fold_stddev\t" << format_score(cv.summary.fold_stddev) << "\n";
        for (std::size_t f = 0; f < cv.summary.fold_scores.size(); ++f) {
          out << "fold_" << f << "\t" << format_score(cv.summary.fold_scores[f]) << "\n";
        }
      }
    } else if (predict_cmd->parsed()) {
      const ModelEnsemble model = load_model(pr_model);
      const Prediction p = predict(model, extract_features(load_edge_list(pr_graph)));
      out << "objective\t" << to_string(p.kind) << "\n"
          << "p_wocc\t" << format_score(p.p_wocc) << "\n";
    } else if (eval_cmd->parsed()) {
      const ModelEnsemble model = load_model(ev_model);
      const auto rows = read_dataset(ev_dataset);
      const auto samples = to_samples(
          rows, model.metric,
          ev_split == "all" ? std::nullopt : std::optional<std::string_view>(ev_split));
      if (samples.empty()) throw std::invalid_argument("no rows to evaluate");
      const EvalReport r = evaluate(model, samples, ev_weighted);
      out << "metric\t" << to_string(model.metric) << "\n"
          << "weighted\t" << (ev_weighted ? "yes" : "no") << "\n"
          << "rows\t" << samples.size() << "\n"
          << "balanced_accuracy\t" << format_score(r.balanced_accuracy) << "\n"
          << "recall_qe\t" << recall_text(r.recall_qe) << "\n"
          << "recall_wocc\t" << recall_text(r.recall_wocc) << "\n";
    } else if (ig_cmd->parsed()) {
      const auto rows = read_dataset(ig_dataset);
      const auto samples = to_samples(rows, metric_from(ig_metric));
      const auto gains = information_gain(samples, ig_bins);
      std::ostringstream body;
      body << "feature\tgain\tmin\tmax\tbin\tqe\twocc\n";
      for (const auto& fg : gains) {
        for (std::size_t b = 0; b < fg.histogram.size(); ++b) {
          body << fg.feature << '\t' << format_score(fg.gain) << '\t' << format_score(fg.min)
               << '\t' << format_score(fg.max) << '\t' << b << '\t' << fg.histogram[b].first
               << '\t' << fg.histogram[b].second << '\n';
        }
      }
      if (!ig_out.empty()) {
        write_text(ig_out, manifest_for(*ig_cmd, g, {ig_dataset}).header(), body.str());
      }
      if (!g.quiet) {
        for (const auto& fg : gains) out << fg.feature << '\t' << format_score(fg.gain) << '\n';
      }
    } else if (compare_cmd->parsed()) {
      const auto rows = read_dataset(c_dataset);
      const ModelEnsemble model = load_model(c_model);
      const Comparison c = compare_selectors(rows, model, c_tr_rate);
      const std::string header = manifest_for(*compare_cmd, g, {c_dataset, c_model}).header();
      std::ostringstream cells;
      write_cells(cells, c.cells);
      write_text(c_out, header, cells.str());
      if (!c_rows.empty()) {
        std::ostringstream per_network;
        write_comparison_rows(per_network, c.rows);
        write_text(c_rows, header, per_network.str());
      }
      if (!g.quiet) out << cells.str();
    } else if (generate->parsed()) {
      const std::string header = manifest_for(*generate, g, {}).header();
      if (!gen_dir.empty()) {
        const auto manifest = write_toy_corpus(gen_dir, gen_count, g.seed, header);
        if (!g.quiet) out << "manifest\t" << manifest.string() << "\n";
      } else {
        if (gen_graph.empty() || gen_truth.empty()) {
          throw std::invalid_argument("generate needs --corpus-dir or --graph and --truth");
        }
        const PlantedNetwork net = generate_test_network(gen_n, gen_communities, gen_overlap,
                                                         gen_p_in, gen_p_out, g.seed);
        write_edge_list(gen_graph, net.graph, header);
        write_cover(gen_truth, net.truth, net.graph, header);
        if (!g.quiet) {
          out << "nodes\t" << net.graph.num_nodes() << "\n"
              << "edges\t" << net.graph.num_edges() << "\n";
        }
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return main(std::move(args), std::cout, std::cerr);
}

}  // namespace nectar::cli
