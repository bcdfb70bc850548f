// Command-line surface: dataset generation, GLO training, inversion,
// inpainting, super-resolution, reanimation, and the evaluation report.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "styleprior/config.hpp"
#include "styleprior/eval.hpp"
#include "styleprior/glotrain.hpp"
#include "styleprior/image_io.hpp"
#include "styleprior/invert.hpp"
#include "styleprior/priors.hpp"
#include "styleprior/reanimate.hpp"
#include "styleprior/sprites.hpp"
#include "styleprior/stylegen.hpp"

namespace fs = std::filesystem;
using namespace styleprior;

namespace {

// Ties CLI11 options to a config-file key set. Precedence: defaults, then
// config file values, then explicit flags.
class OptionBag {
 public:
  explicit OptionBag(CLI::App* cmd) : cmd_(cmd) {
    config_opt_ = cmd_->add_option("--config", config_path_, "key=value config file");
  }

  void add_int(const std::string& key, int& var, const std::string& desc) {
    reg(key, cmd_->add_option("--" + key, var, desc), [&var, key](const std::string& v) {
      var = parse_long(key, v);
    });
  }
  void add_u64(const std::string& key, std::uint64_t& var, const std::string& desc) {
    reg(key, cmd_->add_option("--" + key, var, desc), [&var, key](const std::string& v) {
      try {
        std::size_t used = 0;
        var = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': cannot parse '" + v + "' as integer");
      }
    });
  }
  void add_double(const std::string& key, double& var, const std::string& desc) {
    reg(key, cmd_->add_option("--" + key, var, desc), [&var, key](const std::string& v) {
      try {
        std::size_t used = 0;
        var = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': cannot parse '" + v + "' as number");
      }
    });
  }
  void add_string(const std::string& key, std::string& var, const std::string& desc,
                  bool required = false) {
    CLI::Option* o = cmd_->add_option("--" + key, var, desc);
    if (required) required_.emplace_back(key, &var);
    reg(key, o, [&var](const std::string& v) { var = v; });
  }
  void add_flag(const std::string& key, bool& var, const std::string& desc) {
    reg(key, cmd_->add_flag("--" + key, var, desc), [&var, key](const std::string& v) {
      if (v == "true" || v == "1")
        var = true;
      else if (v == "false" || v == "0")
        var = false;
      else
        throw UsageError("config key '" + key + "': cannot parse '" + v + "' as boolean");
    });
  }

  // After CLI11 parsing: fill unset options from the config file, then
  // check required paths ended up non-empty.
  void finalize() {
    if (config_opt_->count() > 0) {
      std::vector<std::string> known;
      for (const auto& [k, o] : options_) {
        (void)o;
        known.push_back(k);
      }
      const auto kv = parse_kv_file(config_path_);
      validate_config_keys(kv, known);
      for (const auto& [key, value] : kv)
        if (options_.at(key)->count() == 0) setters_.at(key)(value);
    }
    for (const auto& [key, var] : required_)
      if (var->empty()) throw UsageError("missing required option --" + key);
  }

 private:
  static long parse_long(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      long x = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': cannot parse '" + v + "' as integer");
    }
  }

  void reg(const std::string& key, CLI::Option* o,
           std::function<void(const std::string&)> setter) {
    options_[key] = o;
    setters_[key] = std::move(setter);
  }

  CLI::App* cmd_;
  CLI::Option* config_opt_;
  std::string config_path_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::vector<std::pair<std::string, const std::string*>> required_;
};

Strategy parse_strategy(const std::string& name) {
  if (name == "noise") return Strategy::Noise;
  if (name == "global") return Strategy::Global;
  if (name == "per-layer") return Strategy::PerLayer;
  throw UsageError("unknown strategy '" + name + "' (expected noise|global|per-layer)");
}

std::vector<int> parse_channels(const std::string& spec) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string tok = spec.substr(pos, comma - pos);
    if (tok.empty()) throw UsageError("bad channels list '" + spec + "'");
    out.push_back(static_cast<int>(std::stol(tok)));
    pos = comma + 1;
    if (comma == spec.size()) break;
  }
  return out;
}

StyleGenerator load_generator(const std::string& path) {
  return generator_from_checkpoint(load_checkpoint(path));
}

std::vector<std::string> png_files_sorted(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no .png files in " + dir);
  return files;
}

void write_codes_csv(const std::string& path, const std::vector<CodeStack>& codes) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t f = 0; f < codes.size(); ++f)
    for (std::size_t l = 0; l < codes[f].size(); ++l)
      for (std::size_t k = 0; k < codes[f][l].size(); ++k)
        rows.push_back({std::to_string(f), std::to_string(l), std::to_string(k),
                        format_double(codes[f][l][k])});
  write_csv(path, {"frame", "layer", "coordinate", "value"}, rows);
}

void write_loss_curve_csv(const std::string& path, const InversionResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [it, loss] : r.loss_curve)
    rows.push_back({std::to_string(it), format_double(loss)});
  write_csv(path, {"iteration", "loss"}, rows);
}

// ---- subcommands ----

struct GenDataArgs {
  std::string out_dir;
  std::uint64_t seed = 1;
  int count = 500;
  int resolution = 32;
  int trajectory_frames = 0;
};

int run_gen_data(const GenDataArgs& a) {
  fs::create_directories(a.out_dir);
  if (a.trajectory_frames > 0) {
    Rng rng(a.seed);
    Factors base = sample_factors(rng);
    base.identity.shape = ShapeKind::Disk;  // reliably identifiable by the factor oracle
    const int frames = a.trajectory_frames;
    auto path = [&](int i) {
      PoseFactors p;
      p.x = 0.5 + 0.18 * std::sin(kTwoPi * i / frames);
      p.y = 0.5 + 0.18 * std::cos(kTwoPi * i / frames);
      p.rotation = 0.0;
      return p;
    };
    save_dataset(a.out_dir, make_trajectory(base.identity, path, frames, a.resolution));
    std::printf("wrote %d trajectory frames to %s\n", frames, a.out_dir.c_str());
  } else {
    save_dataset(a.out_dir, make_dataset(a.count, a.seed, a.resolution));
    std::printf("wrote %d samples to %s\n", a.count, a.out_dir.c_str());
  }
  return 0;
}

struct TrainArgs {
  std::string data_dir, out_dir;
  std::uint64_t seed = 1;
  int epochs = 300;
  int batch = 16;
  double param_lr = 1e-3;
  double code_lr = 1e-2;
  double mix_prob = 0.5;
  int latent_dim = 32;
  int mapping_depth = 4;
  int base_resolution = 4;
  std::string channels = "64,64,32,16";
};

int run_train(const TrainArgs& a) {
  auto samples = load_dataset(a.data_dir);
  if (samples.empty()) throw UsageError("dataset in " + a.data_dir + " is empty");
  std::vector<Tensor> images;
  for (const auto& s : samples) images.push_back(s.image);

  GeneratorConfig gcfg;
  gcfg.latent_dim = a.latent_dim;
  gcfg.mapping_depth = a.mapping_depth;
  gcfg.base_resolution = a.base_resolution;
  gcfg.stage_channels = parse_channels(a.channels);
  gcfg.final_resolution = images[0].dim(1);
  gcfg.validate();

  TrainConfig tcfg;
  tcfg.epochs = a.epochs;
  tcfg.batch_size = a.batch;
  tcfg.param_lr = a.param_lr;
  tcfg.code_lr = a.code_lr;
  tcfg.mix_prob = a.mix_prob;
  tcfg.seed = a.seed;

  TrainResult r = train_glo(images, gcfg, tcfg, FeatureExtractor::random_conv(kPhiOptimizeSeed));

  fs::create_directories(a.out_dir);
  save_checkpoint(a.out_dir + "/checkpoint.ckpt", make_checkpoint(r.gen, r.codes, r.epoch_loss));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    rows.push_back({std::to_string(e), format_double(r.epoch_loss[e])});
  write_csv(a.out_dir + "/train_loss.csv", {"epoch", "loss"}, rows);
  std::printf("trained %d epochs, final loss %s; checkpoint in %s\n", a.epochs,
              format_fixed(r.epoch_loss.back()).c_str(), a.out_dir.c_str());
  return 0;
}

struct InvertArgs {
  std::string checkpoint, image, out_dir;
  std::string strategy = "per-layer";
  int iterations = 1000;
  double lr = 0.001;
  int record_every = 10;
};

int run_invert(const InvertArgs& a) {
  StyleGenerator gen = load_generator(a.checkpoint);
  Tensor image = read_png_rgb(a.image);
  InversionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.iterations = a.iterations;
  cfg.lr = a.lr;
  cfg.record_every = a.record_every;
  InversionResult r = invert(gen, image, FeatureExtractor::random_conv(kPhiOptimizeSeed), cfg);

  fs::create_directories(a.out_dir);
  write_png_rgb(a.out_dir + "/reconstruction.png", r.image);
  write_loss_curve_csv(a.out_dir + "/loss_curve.csv", r);
  write_codes_csv(a.out_dir + "/codes.csv", {to_code_stack(r.layer_codes)});
  write_file_atomic(a.out_dir + "/report.txt",
                    "final_loss " + format_double(r.loss) + "\nstrategy " + a.strategy + "\n");
  std::printf("final loss %s; outputs in %s\n", format_fixed(r.loss).c_str(), a.out_dir.c_str());
  return 0;
}

struct InpaintArgs {
  std::string checkpoint, image, out_dir, mask;
  std::uint64_t mask_seed = 7;
  std::string strategy = "per-layer";
  int iterations = 1000;
  double lr = 0.001;
};

int run_inpaint(const InpaintArgs& a) {
  StyleGenerator gen = load_generator(a.checkpoint);
  Tensor gt = read_png_rgb(a.image);
  const int r = gen.config().final_resolution;
  Tensor mask = a.mask.empty() ? make_square_mask(r, a.mask_seed) : read_png_mask(a.mask);
  Tensor corrupted = mul(gt, detail::mask_to_channels(mask, 3)).clone();

  InversionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.iterations = a.iterations;
  cfg.lr = a.lr;
  InpaintResult res =
      inpaint(gen, corrupted, mask, FeatureExtractor::random_conv(kPhiOptimizeSeed), cfg, &gt);
  Tensor meanfill = baseline_meanfill(corrupted, mask);
  const double meanfill_err = detail::region_l1(meanfill, gt, mask, true);

  fs::create_directories(a.out_dir);
  write_png_mask(a.out_dir + "/mask.png", mask);
  write_png_rgb(a.out_dir + "/corrupted.png", corrupted);
  write_png_rgb(a.out_dir + "/output.png", res.output);
  write_png_rgb(a.out_dir + "/raw_output.png", res.raw_output);
  write_png_rgb(a.out_dir + "/baseline_meanfill.png", meanfill);
  write_csv(a.out_dir + "/report.csv",
            {"masked_error", "raw_error", "meanfill_error", "objective_loss"},
            {{format_double(res.masked_error), format_double(res.raw_error),
              format_double(meanfill_err), format_double(res.inversion.loss)}});
  std::printf("masked-region error %s (mean-fill %s); outputs in %s\n",
              format_fixed(res.masked_error).c_str(), format_fixed(meanfill_err).c_str(),
              a.out_dir.c_str());
  return 0;
}

struct SrArgs {
  std::string checkpoint, image, out_dir;
  int sr_factor = 4;
  std::string strategy = "per-layer";
  int iterations = 1000;
  double lr = 0.001;
};

int run_sr(const SrArgs& a) {
  StyleGenerator gen = load_generator(a.checkpoint);
  const int r = gen.config().final_resolution;
  const int k = a.sr_factor;
  Tensor input = read_png_rgb(a.image);

  Tensor lr_img;
  const Tensor* gt = nullptr;
  Tensor gt_storage;
  if (input.dim(1) == r) {
    gt_storage = input;
    gt = &gt_storage;
    lr_img = downsample_avg(input, k).clone();
  } else if (input.dim(1) * k == r) {
    lr_img = input;
  } else {
    throw UsageError("sr: input must be the generator resolution or 1/factor of it");
  }

  InversionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.iterations = a.iterations;
  cfg.lr = a.lr;
  SRSpec spec;
  spec.factor = k;
  SRResult res =
      super_resolve(gen, lr_img, spec, FeatureExtractor::random_conv(kPhiOptimizeSeed), cfg, gt);

  fs::create_directories(a.out_dir);
  write_png_rgb(a.out_dir + "/lr_input.png", lr_img);
  write_png_rgb(a.out_dir + "/output.png", res.output);
  write_png_rgb(a.out_dir + "/baseline_nearest.png",
                baseline_upsample(lr_img, k, UpsampleMode::Nearest));
  write_png_rgb(a.out_dir + "/baseline_bilinear.png",
                baseline_upsample(lr_img, k, UpsampleMode::Bilinear));
  std::vector<std::string> row = {format_double(res.consistency_residual),
                                  format_double(res.zero_code_residual),
                                  format_double(res.inversion.loss)};
  std::vector<std::string> header = {"consistency_residual", "zero_code_residual",
                                     "objective_loss"};
  if (gt) {
    header.insert(header.begin(), "full_res_error");
    row.insert(row.begin(), format_double(res.full_res_error));
  }
  write_csv(a.out_dir + "/report.csv", header, {row});
  std::printf("consistency residual %s; outputs in %s\n",
              format_fixed(res.consistency_residual).c_str(), a.out_dir.c_str());
  return 0;
}

struct ReanimateArgs {
  std::string checkpoint, source_dir, target, out_dir;
  std::string strategy = "per-layer";
  int iterations = 1000;
  double lr = 0.001;
  int window = 5;
  double pose_scale = 1.0;
  bool normalize_pose = false;
  bool skip_fidelity = false;
  int jobs = 1;
};

int run_reanimate(const ReanimateArgs& a) {
  StyleGenerator gen = load_generator(a.checkpoint);
  FeatureExtractor phi = FeatureExtractor::random_conv(kPhiOptimizeSeed);

  std::vector<Tensor> source;
  for (const std::string& f : png_files_sorted(a.source_dir)) source.push_back(read_png_rgb(f));
  std::vector<Tensor> targets;
  if (fs::is_directory(a.target))
    for (const std::string& f : png_files_sorted(a.target)) targets.push_back(read_png_rgb(f));
  else
    targets.push_back(read_png_rgb(a.target));

  InversionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.iterations = a.iterations;
  cfg.lr = a.lr;

  LatentTrajectory traj = build_trajectory(gen, source, phi, cfg, a.jobs);
  CodeStack target_id = target_identity(gen, targets, phi, cfg, a.jobs);

  TransferConfig tcfg;
  tcfg.pose_scale = a.pose_scale;
  tcfg.normalize_pose = a.normalize_pose;
  tcfg.smoothing_window = a.window;
  tcfg.validate();
  std::vector<CodeStack> deltas = smooth(traj.deltas, a.window);
  std::vector<CodeStack> codes = transfer(target_id, deltas, tcfg);
  std::vector<Tensor> video = render_video(gen, codes, a.jobs);

  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < video.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.png", i);
    write_png_rgb(a.out_dir + "/" + name, video[i]);
  }
  write_codes_csv(a.out_dir + "/codes.csv", codes);

  if (!a.skip_fidelity) {
    const IdentityFactors target_id_factors = estimate_factors(targets[0]).identity;
    FidelityReport rep = reanimation_fidelity(source, video, target_id_factors);
    write_csv(a.out_dir + "/fidelity.csv",
              {"r_x", "r_y", "r_rotation", "identity_accuracy", "x_degenerate", "y_degenerate"},
              {{format_double(rep.r_x), format_double(rep.r_y), format_double(rep.r_rotation),
                format_double(rep.identity_accuracy), rep.x_degenerate ? "1" : "0",
                rep.y_degenerate ? "1" : "0"}});
    std::printf("pose correlation x %.3f y %.3f, identity accuracy %.3f\n", rep.r_x, rep.r_y,
                rep.identity_accuracy);
  }
  std::printf("wrote %zu frames to %s\n", video.size(), a.out_dir.c_str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint, out_dir;
  std::uint64_t seed = 424242;
  int suite_size = 20;
  int iterations = 1000;
  double lr = 0.001;
  int sr_factor = 4;
  std::uint64_t mask_seed = 9000;
  int jobs = 1;
};

int run_eval(const EvalArgs& a) {
  StyleGenerator gen = load_generator(a.checkpoint);
  EvalSettings s;
  s.suite_size = a.suite_size;
  s.suite_seed = a.seed;
  s.inversion.iterations = a.iterations;
  s.inversion.lr = a.lr;
  s.sr_factor = a.sr_factor;
  s.mask_seed = a.mask_seed;
  s.jobs = a.jobs;

  std::vector<Tensor> suite = held_out_suite(s, gen.config().final_resolution);
  StrategyEval st = run_strategy_eval(gen, suite, s);
  InpaintEval ip = run_inpaint_eval(gen, suite, s);
  SREval sr = run_sr_eval(gen, suite, s);

  fs::create_directories(a.out_dir);
  write_strategy_csv(a.out_dir + "/eval_strategies.csv", st);
  write_inpaint_csv(a.out_dir + "/eval_inpaint.csv", ip);
  write_sr_csv(a.out_dir + "/eval_sr.csv", sr);
  const std::string report = eval_report_text(st, ip, sr);
  write_file_atomic(a.out_dir + "/eval_report.txt", report);
  std::fputs(report.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"style generator inversion toolkit"};
  app.require_subcommand(1);

  GenDataArgs gd;
  CLI::App* c_gd = app.add_subcommand("gen-data", "render a sprite dataset or trajectory");
  OptionBag b_gd(c_gd);
  b_gd.add_string("out-dir", gd.out_dir, "output directory", true);
  b_gd.add_u64("seed", gd.seed, "random seed");
  b_gd.add_int("count", gd.count, "number of samples");
  b_gd.add_int("resolution", gd.resolution, "image resolution");
  b_gd.add_int("trajectory-frames", gd.trajectory_frames,
               "emit a fixed-identity trajectory with this many frames instead");

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "train the generator by latent optimization");
  OptionBag b_tr(c_tr);
  b_tr.add_string("data-dir", tr.data_dir, "dataset directory (from gen-data)", true);
  b_tr.add_string("out-dir", tr.out_dir, "output directory", true);
  b_tr.add_u64("seed", tr.seed, "random seed");
  b_tr.add_int("epochs", tr.epochs, "training epochs");
  b_tr.add_int("batch", tr.batch, "batch size");
  b_tr.add_double("param-lr", tr.param_lr, "parameter learning rate");
  b_tr.add_double("code-lr", tr.code_lr, "latent code learning rate");
  b_tr.add_double("mix-prob", tr.mix_prob, "per-batch style mixing probability");
  b_tr.add_int("latent-dim", tr.latent_dim, "latent dimensionality");
  b_tr.add_int("mapping-depth", tr.mapping_depth, "mapping network depth");
  b_tr.add_int("base-resolution", tr.base_resolution, "synthesis base resolution");
  b_tr.add_string("channels", tr.channels, "per-stage channel counts, comma separated");

  InvertArgs iv;
  CLI::App* c_iv = app.add_subcommand("invert", "latent-optimize a code for an image");
  OptionBag b_iv(c_iv);
  b_iv.add_string("checkpoint", iv.checkpoint, "trained checkpoint", true);
  b_iv.add_string("image", iv.image, "target image (png)", true);
  b_iv.add_string("out-dir", iv.out_dir, "output directory", true);
  b_iv.add_string("strategy", iv.strategy, "noise|global|per-layer");
  b_iv.add_int("iterations", iv.iterations, "optimization iterations");
  b_iv.add_double("lr", iv.lr, "learning rate");
  b_iv.add_int("record-every", iv.record_every, "loss curve sampling stride");

  InpaintArgs ip;
  CLI::App* c_ip = app.add_subcommand("inpaint", "fill a masked region with the generator prior");
  OptionBag b_ip(c_ip);
  b_ip.add_string("checkpoint", ip.checkpoint, "trained checkpoint", true);
  b_ip.add_string("image", ip.image, "ground-truth image (png); the command corrupts it", true);
  b_ip.add_string("out-dir", ip.out_dir, "output directory", true);
  b_ip.add_string("mask", ip.mask, "mask png (1 = observed); omit to generate one");
  b_ip.add_u64("mask-seed", ip.mask_seed, "seed for the generated square mask");
  b_ip.add_string("strategy", ip.strategy, "noise|global|per-layer");
  b_ip.add_int("iterations", ip.iterations, "optimization iterations");
  b_ip.add_double("lr", ip.lr, "learning rate");

  SrArgs sr;
  CLI::App* c_sr = app.add_subcommand("sr", "super-resolve through the generator prior");
  OptionBag b_sr(c_sr);
  b_sr.add_string("checkpoint", sr.checkpoint, "trained checkpoint", true);
  b_sr.add_string("image", sr.image, "input image: full resolution (scored) or low resolution",
                  true);
  b_sr.add_string("out-dir", sr.out_dir, "output directory", true);
  b_sr.add_int("sr-factor", sr.sr_factor, "downsampling factor");
  b_sr.add_string("strategy", sr.strategy, "noise|global|per-layer");
  b_sr.add_int("iterations", sr.iterations, "optimization iterations");
  b_sr.add_double("lr", sr.lr, "learning rate");

  ReanimateArgs re;
  CLI::App* c_re = app.add_subcommand("reanimate", "transfer motion from a video to a still");
  OptionBag b_re(c_re);
  b_re.add_string("checkpoint", re.checkpoint, "trained checkpoint", true);
  b_re.add_string("source-dir", re.source_dir, "directory of source frames", true);
  b_re.add_string("target", re.target, "target still (png) or directory of stills", true);
  b_re.add_string("out-dir", re.out_dir, "output directory", true);
  b_re.add_string("strategy", re.strategy, "noise|global|per-layer");
  b_re.add_int("iterations", re.iterations, "optimization iterations per frame");
  b_re.add_double("lr", re.lr, "learning rate");
  b_re.add_int("window", re.window, "moving-average smoothing window (odd)");
  b_re.add_double("pose-scale", re.pose_scale, "pose delta scale factor");
  b_re.add_flag("normalize-pose", re.normalize_pose, "rescale deltas to the median norm");
  b_re.add_flag("skip-fidelity", re.skip_fidelity, "skip the factor-oracle fidelity report");
  b_re.add_int("jobs", re.jobs, "parallel per-frame inversions");

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "strategy, inpainting and sr comparison tables");
  OptionBag b_ev(c_ev);
  b_ev.add_string("checkpoint", ev.checkpoint, "trained checkpoint", true);
  b_ev.add_string("out-dir", ev.out_dir, "output directory", true);
  b_ev.add_u64("seed", ev.seed, "held-out suite seed");
  b_ev.add_int("suite-size", ev.suite_size, "held-out suite size");
  b_ev.add_int("iterations", ev.iterations, "optimization iterations");
  b_ev.add_double("lr", ev.lr, "learning rate");
  b_ev.add_int("sr-factor", ev.sr_factor, "super-resolution factor");
  b_ev.add_u64("mask-seed", ev.mask_seed, "base seed for inpainting masks");
  b_ev.add_int("jobs", ev.jobs, "parallel per-image inversions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_gd->parsed()) {
      b_gd.finalize();
      return run_gen_data(gd);
    }
    if (c_tr->parsed()) {
      b_tr.finalize();
      return run_train(tr);
    }
    if (c_iv->parsed()) {
      b_iv.finalize();
      return run_invert(iv);
    }
    if (c_ip->parsed()) {
      b_ip.finalize();
      return run_inpaint(ip);
    }
    if (c_sr->parsed()) {
      b_sr.finalize();
      return run_sr(sr);
    }
    if (c_re->parsed()) {
      b_re.finalize();
      return run_reanimate(re);
    }
    if (c_ev->parsed()) {
      b_ev.finalize();
      return run_eval(ev);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
