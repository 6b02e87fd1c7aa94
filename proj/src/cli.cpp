#include "detcal/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <iostream>
#include <sstream>

#include "detcal/error.hpp"
#include "detcal/io.hpp"
#include "detcal/report.hpp"
#include "detcal/synth.hpp"

namespace detcal {

namespace {

struct EvaluateOptions {
  std::string detections;
  std::string ground_truth;
  std::string link = "threshold:0.5";
  double score_threshold = 0.5;
  std::string bandwidth = "auto";
  int bins = 20;
  int laece_bins = 25;
  std::string out = "-";
  std::string format = "json";
  std::string similarity = "iou";
  bool shared_bandwidth = false;
  std::uint64_t seed = 0;
  std::size_t max_samples = 0;
  bool sequential = false;
  unsigned threads = 0;
  std::string timestamp;
  std::vector<double> gammas;

};

struct SynthOptions {
  std::vector<std::size_t> ns{10000};
  double t1 = 0.6;
  double t2 = 0.6;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  std::string estimators = "kde_threshold,dece";
  std::string out = "-";
  std::string format = "csv";
  bool sequential = false;
  unsigned threads = 0;
};

void add_evaluate_flags(CLI::App &cmd, EvaluateOptions &o) {
  // Presence is checked after parsing so unknown flags are reported first.
  cmd.add_option("--detections", o.detections, "COCO results JSON (required)");
  cmd.add_option("--ground-truth", o.ground_truth, "COCO annotation JSON (required)");
  cmd.add_option("--link", o.link, "identity | threshold:<b> | ramp:<a>:<b> | hinge")
      ->capture_default_str();
  cmd.add_option("--score-threshold", o.score_threshold, "drop detections scoring below this")
      ->capture_default_str();
  cmd.add_option("--bandwidth", o.bandwidth, "auto (leave-one-out MLE) or a positive value")
      ->capture_default_str();
  cmd.add_option("--bins", o.bins, "D-ECE bins")->capture_default_str();
  cmd.add_option("--laece-bins", o.laece_bins, "LaECE bins")->capture_default_str();
  cmd.add_option("--out", o.out, "output path, - for stdout")->capture_default_str();
  cmd.add_option("--format", o.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd.add_option("--similarity", o.similarity, "iou or dice")
      ->check(CLI::IsMember({"iou", "dice"}))
      ->capture_default_str();
  cmd.add_flag("--shared-bandwidth", o.shared_bandwidth, "pool all classes for bandwidth");
  cmd.add_option("--seed", o.seed, "seed for subsampling")->capture_default_str();
  cmd.add_option("--max-samples", o.max_samples, "subsample each estimate to at most n");
  cmd.add_flag("--sequential", o.sequential, "single-threaded, bit-reproducible run");
  cmd.add_option("--threads", o.threads, "worker threads, 0 for all")->capture_default_str();
  cmd.add_option("--timestamp", o.timestamp, "fixed report timestamp");
}

ReportConfig report_config(const EvaluateOptions &o) {
  if (o.detections.empty())
    throw ValidationError("--detections is required");
  if (o.ground_truth.empty())
    throw ValidationError("--ground-truth is required");
  ReportConfig cfg;
  try {
    cfg.link = LinkSpec::parse(o.link);
  } catch (const ValidationError &e) {
    throw ValidationError(std::string("--link: ") + e.what());
  }
  if (!(o.score_threshold >= 0.0 && o.score_threshold < 1.0))
    throw ValidationError("--score-threshold: must lie in [0, 1), got " +
                          format_double(o.score_threshold));
  cfg.score_threshold = o.score_threshold;
  if (o.bandwidth != "auto") {
    double value = 0.0;
    const auto *end = o.bandwidth.data() + o.bandwidth.size();
    auto [ptr, ec] = std::from_chars(o.bandwidth.data(), end, value);
    if (ec != std::errc() || ptr != end || !(value > 0.0) || !std::isfinite(value))
      throw ValidationError("--bandwidth: expected auto or a positive number, got '" +
                            o.bandwidth + "'");
    cfg.bandwidth.automatic = false;
    cfg.bandwidth.value = value;
  }
  cfg.bandwidth.shared = o.shared_bandwidth;
  if (o.bins < 1)
    throw ValidationError("--bins: must be at least 1");
  if (o.laece_bins < 1)
    throw ValidationError("--laece-bins: must be at least 1");
  cfg.dece_bins = o.bins;
  cfg.laece_bins = o.laece_bins;
  cfg.similarity = o.similarity == "dice" ? Similarity::Dice : Similarity::IoU;
  cfg.seed = o.seed;
  if (o.max_samples != 0) {
    if (o.max_samples < 2)
      throw ValidationError("--max-samples: must be at least 2");
    cfg.max_samples = o.max_samples;
  }
  cfg.threads = o.sequential ? 1 : o.threads;
  if (!o.timestamp.empty())
    cfg.timestamp = o.timestamp;
  return cfg;
}

void emit(const std::string &path, const std::string &text, std::ostream &out) {
  if (path == "-")
    out << text;
  else
    write_text_file(path, text);
}

DatasetBundle load(const EvaluateOptions &o, std::ostream &err) {
  auto bundle = load_bundle(o.detections, o.ground_truth);
  if (bundle.clamped_scores > 0)
    err << "warning: clamped " << bundle.clamped_scores
        << " detection scores into [0, 1]\n";
  return bundle;
}

void run_evaluate(const EvaluateOptions &o, std::ostream &out, std::ostream &err) {
  auto cfg = report_config(o);
  const auto bundle = load(o, err);
  std::set<CategoryId> vocab;
  for (const auto &[id, name] : bundle.categories)
    vocab.insert(id);
  cfg.categories = vocab;
  const auto report = evaluate_report(bundle.detections, bundle.ground_truth, cfg);
  if (o.format == "csv") {
    std::ostringstream csv;
    write_report_csv(csv, report);
    emit(o.out, csv.str(), out);
  } else {
    emit(o.out, report_to_json(report), out);
  }
}

void run_sweep(const EvaluateOptions &o, std::ostream &out, std::ostream &err) {
  auto cfg = report_config(o);
  if (o.gammas.empty())
    throw ValidationError("--gammas is required");
  for (double g : o.gammas)
    if (!(g >= 0.0 && g < 1.0))
      throw ValidationError("--gammas: every threshold must lie in [0, 1), got " +
                            format_double(g));
  const auto bundle = load(o, err);
  std::set<CategoryId> vocab;
  for (const auto &[id, name] : bundle.categories)
    vocab.insert(id);
  cfg.categories = vocab;
  const auto rows = sweep_gamma(bundle.detections, bundle.ground_truth, o.gammas, cfg);
  if (o.format == "csv") {
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    emit(o.out, csv.str(), out);
  } else {
    emit(o.out, sweep_to_json(rows), out);
  }
}

void run_synth(const SynthOptions &o, std::ostream &out) {
  ConvergenceConfig cfg;
  for (auto n : o.ns)
    if (n < 2)
      throw ValidationError("--n: sample sizes must be at least 2");
  if (o.seeds < 1)
    throw ValidationError("--seeds: at least one seed is required");
  if (!(o.t1 > 0.0))
    throw ValidationError("--t1: temperature must be positive");
  if (!(o.t2 > 0.0))
    throw ValidationError("--t2: temperature must be positive");
  cfg.ns = o.ns;
  for (std::size_t i = 0; i < o.seeds; ++i)
    cfg.seeds.push_back(o.seed + i);
  try {
    cfg.estimators = parse_estimators(o.estimators);
  } catch (const ValidationError &e) {
    throw ValidationError(std::string("--estimators: ") + e.what());
  }
  cfg.t1 = o.t1;
  cfg.t2 = o.t2;
  cfg.threads = o.sequential ? 1 : o.threads;
  const auto rows = convergence_experiment(cfg);
  std::ostringstream text;
  if (o.format == "json")
    write_convergence_json(text, rows, cfg);
  else
    write_convergence_csv(text, rows);
  emit(o.out, text.str(), out);
}

} // namespace

int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Calibration error estimation for object detectors", "detcal"};
  app.require_subcommand(1);

  EvaluateOptions eval_opts;
  auto *evaluate = app.add_subcommand("evaluate", "calibration report for COCO-format results");
  add_evaluate_flags(*evaluate, eval_opts);

  EvaluateOptions sweep_opts;
  auto *sweep = app.add_subcommand("sweep", "headline CE over a list of score thresholds");
  add_evaluate_flags(*sweep, sweep_opts);
  sweep->add_option("--gammas", sweep_opts.gammas, "comma-separated score thresholds")
      ->delimiter(',');

  SynthOptions synth_opts;
  auto *synth = app.add_subcommand("synth", "synthetic benchmark with known calibration error");
  synth->add_option("--n", synth_opts.ns, "comma-separated sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  synth->add_option("--t1", synth_opts.t1, "temperature producing calibrated scores")
      ->capture_default_str();
  synth->add_option("--t2", synth_opts.t2, "temperature introducing miscalibration")
      ->capture_default_str();
  synth->add_option("--seeds", synth_opts.seeds, "number of seeds")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "first seed")->capture_default_str();
  synth->add_option("--estimators", synth_opts.estimators,
                    "comma-separated: kde_threshold, kde_identity, dece, laece")
      ->capture_default_str();
  synth->add_option("--out", synth_opts.out, "output path, - for stdout")->capture_default_str();
  synth->add_option("--format", synth_opts.format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  synth->add_flag("--sequential", synth_opts.sequential, "single-threaded run");
  synth->add_option("--threads", synth_opts.threads, "worker threads, 0 for all")
      ->capture_default_str();

  std::vector<const char *> argv{"detcal"};
  for (const auto &a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    if (evaluate->parsed())
      run_evaluate(eval_opts, out, err);
    else if (sweep->parsed())
      run_sweep(sweep_opts, out, err);
    else
      run_synth(synth_opts, out);
  } catch (const IoError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace detcal
