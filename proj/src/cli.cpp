#include "cpdm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cpdm/checkpoint.hpp"
#include "cpdm/pgm.hpp"
#include "cpdm/phantom.hpp"
#include "cpdm/reports.hpp"
#include "cpdm/rng.hpp"
#include "cpdm/solver.hpp"
#include "cpdm/speckle_model.hpp"
#include "cpdm/training.hpp"

namespace cpdm {

namespace fs = std::filesystem;

namespace {

struct SimulateOptions {
  std::string spec;
  double looks = 4.0;
  std::uint64_t seed = 0;
  bool randomize = false;
  std::string out_clean;
  std::string out_noisy;
  std::string out_roi;
  int depth = 16;
};

struct TrainOptions {
  std::string data;
  int epochs = 50;
  int batch = 2;
  double lr = 1e-4;
  double lr_decay = 0.5;
  int lr_period = 5;
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 6e-3;
  int patch = 0;
  int patches_per_image = 8;
  double log_floor = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

struct DespeckleOptions {
  std::string in;
  std::string ckpt;
  double lambda = 0.2;
  int max_steps = 4;
  std::string variant = "cpdm";
  double log_floor = 1e-3;
  double newton_tol = 1e-6;
  std::uint64_t seed = 0;
  int depth = 16;
  std::string out;
  std::string trace;
};

struct EvaluateOptions {
  std::string img;
  std::string ref;
  std::string roi;
  std::string report;
  std::string json;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

int run_simulate(const SimulateOptions& o, std::ostream& out) {
  std::ifstream f(o.spec);
  if (!f) throw Error("cannot open phantom spec '" + o.spec + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed phantom spec '" + o.spec + "': " + e.what());
  }
  PhantomSpec spec = phantom_spec_from_json(j);
  if (o.randomize) spec = random_phantom_spec(spec.width, spec.height, o.seed);
  const Image clean = generate_phantom(spec);
  const Image noisy = apply_speckle(clean, o.looks, o.seed);
  write_pgm(o.out_clean, clean, o.depth);
  write_pgm(o.out_noisy, noisy, o.depth);
  if (!o.out_roi.empty()) write_text(o.out_roi, format_roi(derive_roi(clean, spec.background)));
  out << "simulated " << spec.width << "x" << spec.height << " phantom, M=" << o.looks << '\n';
  return 0;
}

int run_train(const TrainOptions& o, std::ostream& out) {
  std::vector<fs::path> files;
  if (!fs::is_directory(o.data)) throw Error("training data directory '" + o.data + "' not found");
  for (const auto& entry : fs::directory_iterator(o.data)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .pgm files in '" + o.data + "'");

  std::vector<LogImage> logs;
  for (const auto& p : files) logs.push_back(log_transform(read_pgm(p), o.log_floor));
  const LogAffine norm = fit_log_affine(logs);

  std::vector<Grid> dataset;
  Rng crop_rng(o.seed, 0xc409);
  for (const auto& l : logs) {
    Grid g(l.width(), l.height());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = norm.to_model(l[i]);
    if (o.patch <= 0) {
      dataset.push_back(std::move(g));
      continue;
    }
    if (o.patch > g.width() || o.patch > g.height()) throw Error("--patch exceeds image size");
    for (int k = 0; k < o.patches_per_image; ++k) {
      const int x0 = crop_rng.uniform_int(0, g.width() - o.patch);
      const int y0 = crop_rng.uniform_int(0, g.height() - o.patch);
      dataset.push_back(crop(g, x0, y0, o.patch, o.patch));
    }
  }

  Checkpoint ckpt;
  ckpt.schedule = {o.steps, o.beta_start, o.beta_end};
  ckpt.normalization = norm;
  TrainingConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.lr_decay = o.lr_decay;
  cfg.lr_decay_period = o.lr_period;
  cfg.seed = o.seed;
  const auto result = train(dataset, ckpt.schedule.build(), cfg, ArchitectureConfig{},
                            [&](int epoch, double loss, const PredictorParams&) {
                              out << "epoch " << epoch + 1 << " loss " << loss << '\n';
                            });
  ckpt.params = result.params;
  save_checkpoint(o.out, ckpt);
  out << "trained on " << dataset.size() << " grids from " << files.size() << " images\n";
  return 0;
}

int run_despeckle(const DespeckleOptions& o, std::ostream& out) {
  if (o.variant != "cpdm" && o.variant != "logdm") {
    throw Error("--variant must be cpdm or logdm");
  }
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const Image noisy = read_pgm(o.in);
  const ConvPredictor predictor(ckpt.params);
  SpeckleParams speckle;
  speckle.log_floor = o.log_floor;
  SolverConfig cfg;
  cfg.lambda = o.lambda;
  cfg.max_reverse_steps = o.max_steps;
  cfg.newton_tol = o.newton_tol;
  cfg.seed = o.seed;
  const NoiseSchedule sched = ckpt.schedule.build();

  DespeckleResult result;
  try {
    result = o.variant == "cpdm"
                 ? despeckle(noisy, predictor, sched, ckpt.normalization, speckle, cfg)
                 : despeckle_prior_only(noisy, predictor, sched, ckpt.normalization, speckle, cfg);
  } catch (const DespeckleError& e) {
    if (!o.trace.empty()) {
      auto j = trace_to_json(e.trace());
      j["error"] = e.what();
      write_text(o.trace, j.dump(2) + "\n");
    }
    throw;
  }
  write_pgm(o.out, result.image, o.depth);
  if (!o.trace.empty()) write_text(o.trace, trace_to_json(result.trace).dump(2) + "\n");
  out << o.variant << ": start step " << result.trace.start_step << ", "
      << result.trace.timesteps.size() << " reverse steps\n";
  return 0;
}

int run_evaluate(const EvaluateOptions& o, std::ostream& out) {
  const Image img = read_pgm(o.img);
  const RoiSpec roi = read_roi_file(o.roi);
  std::optional<Image> ref;
  if (!o.ref.empty()) ref = read_pgm(o.ref);
  const MetricsReport rep = evaluate_metrics(img, roi, ref ? &*ref : nullptr);
  const std::string text = format_report(rep);
  write_text(o.report, text);
  if (!o.json.empty()) write_text(o.json, report_to_json(rep).dump(2) + "\n");
  out << text;
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Log-domain diffusion despeckling with a gamma-likelihood fidelity step", "cpdm"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Render a phantom and apply gamma speckle");
  simulate->add_option("--spec", sim.spec, "Phantom spec (JSON)")->required();
  simulate->add_option("--m", sim.looks, "Multilook count M")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Speckle (and layout) seed")->capture_default_str();
  simulate->add_flag("--randomize", sim.randomize, "Randomize the layer layout from --seed");
  simulate->add_option("--out-clean", sim.out_clean, "Clean PGM output")->required();
  simulate->add_option("--out-noisy", sim.out_noisy, "Speckled PGM output")->required();
  simulate->add_option("--out-roi", sim.out_roi, "Write suggested ROIs for this phantom");
  simulate->add_option("--depth", sim.depth, "PGM bit depth (8 or 16)")->capture_default_str();

  TrainOptions tr;
  auto* training = app.add_subcommand("train", "Train the noise predictor on clean PGM images");
  training->add_option("--data", tr.data, "Directory of clean .pgm images")->required();
  training->add_option("--epochs", tr.epochs)->capture_default_str();
  training->add_option("--batch", tr.batch)->capture_default_str();
  training->add_option("--lr", tr.lr, "Initial Adam step size")->capture_default_str();
  training->add_option("--lr-decay", tr.lr_decay)->capture_default_str();
  training->add_option("--lr-period", tr.lr_period, "Epochs between decays")->capture_default_str();
  training->add_option("--t", tr.steps, "Diffusion steps T")->capture_default_str();
  training->add_option("--beta-start", tr.beta_start)->capture_default_str();
  training->add_option("--beta-end", tr.beta_end)->capture_default_str();
  training->add_option("--patch", tr.patch, "Random square crop size (0 = whole images)")
      ->capture_default_str();
  training->add_option("--patches-per-image", tr.patches_per_image)->capture_default_str();
  training->add_option("--log-floor", tr.log_floor)->capture_default_str();
  training->add_option("--seed", tr.seed)->capture_default_str();
  training->add_option("--out", tr.out, "Checkpoint output")->required();

  DespeckleOptions ds;
  auto* desp = app.add_subcommand("despeckle", "Despeckle a PGM image with a trained checkpoint");
  desp->add_option("--in", ds.in, "Speckled PGM input")->required();
  desp->add_option("--ckpt", ds.ckpt, "Checkpoint from `train`")->required();
  desp->add_option("--lambda", ds.lambda, "Coupling weight")->capture_default_str();
  desp->add_option("--max-steps", ds.max_steps, "Cap on reverse steps")->capture_default_str();
  desp->add_option("--variant", ds.variant, "cpdm (with fidelity) or logdm (prior only)")
      ->check(CLI::IsMember({"cpdm", "logdm"}))
      ->capture_default_str();
  desp->add_option("--log-floor", ds.log_floor)->capture_default_str();
  desp->add_option("--newton-tol", ds.newton_tol)->capture_default_str();
  desp->add_option("--seed", ds.seed)->capture_default_str();
  desp->add_option("--depth", ds.depth)->capture_default_str();
  desp->add_option("--out", ds.out, "Despeckled PGM output")->required();
  desp->add_option("--trace", ds.trace, "Write a JSON trace");

  EvaluateOptions ev;
  auto* eval = app.add_subcommand("evaluate", "Compute CNR / ENL (and PSNR) over ROIs");
  eval->add_option("--img", ev.img, "Image to score")->required();
  eval->add_option("--ref", ev.ref, "Clean reference for PSNR");
  eval->add_option("--roi", ev.roi, "ROI file")->required();
  eval->add_option("--report", ev.report, "key=value report output")->required();
  eval->add_option("--json", ev.json, "Optional JSON report output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim, out);
    if (training->parsed()) return run_train(tr, out);
    if (desp->parsed()) return run_despeckle(ds, out);
    return run_evaluate(ev, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace cpdm
