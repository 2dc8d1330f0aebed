// sci: command-line front end for the snapshot compressive imaging codec.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sci/ad/tensor.hpp"
#include "sci/container.hpp"
#include "sci/gaptv.hpp"
#include "sci/mask.hpp"
#include "sci/metrics.hpp"
#include "sci/parallel.hpp"
#include "sci/pipeline.hpp"
#include "sci/random.hpp"
#include "sci/scenes.hpp"
#include "sci/sensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sci;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("SCI_SEED")) {
      try {
        std::size_t used = 0;
        const auto value = std::stoull(env, &used);
        if (used == std::string(env).size()) return value;
      } catch (const std::exception&) {
      }
      throw UsageError(std::string("SCI_SEED is not an unsigned integer: ") + env);
    }
    return 0;
  }
};

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw std::runtime_error(what + " not found: " + path.string());
}

void prepare_output(const fs::path& path) {
  if (path.empty()) throw UsageError("output path is empty");
  const fs::path parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_pgm(const fs::path& path, const Measurement& y) {
  prepare_output(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << y.width() << ' ' << y.height() << '\n' << y.max_code() << '\n';
  for (auto code : y.digital()) {
    if (y.max_code() > 255) out.put(static_cast<char>(code >> 8));
    out.put(static_cast<char>(code & 0xFF));
  }
}

// Measurement in irradiance units together with the aperture recorded at capture.
Image irradiance(const fs::path& path) {
  const Measurement y = io::load_measurement(path);
  const io::Manifest manifest = io::read_manifest(path);
  const double aperture = manifest.aperture.value_or(1.0);
  Image out = y.normalized();
  for (double& v : out.data) v /= aperture;
  return out;
}

std::vector<VideoCube> synthetic_set(int count, const net::Res2formerConfig& d, std::uint64_t seed,
                                     std::uint64_t stream) {
  return scenes::synthesize_suite(count, d.frames, d.height, d.width, derive_seed(seed, stream));
}

constexpr std::uint64_t kTrainScenes = 100;
constexpr std::uint64_t kValidationScenes = 101;
constexpr std::uint64_t kTestScenes = 102;

// gen-mask -----------------------------------------------------------------

struct GenMaskArgs {
  std::string kind = "structural-random";
  int frames = 8, height = 256, width = 256, lambda = 4;
  double p = 0.5;
  fs::path checkpoint, out;
};

int gen_mask(const GenMaskArgs& a, const Globals& g) {
  const std::uint64_t seed = g.resolved_seed();
  mask::MaskCube m;
  if (a.kind == "binary") {
    m = mask::random_binary(a.frames, a.height, a.width, a.p, seed);
  } else if (a.kind == "structural-random") {
    m = mask::random_structural(a.frames, a.height, a.width, a.lambda, seed);
  } else if (a.kind == "structural-learned") {
    if (a.checkpoint.empty()) throw UsageError("structural-learned needs --checkpoint");
    require_file(a.checkpoint, "checkpoint");
    m = pipeline::load_model(a.checkpoint).mask;
  } else {
    throw UsageError("unknown mask kind: " + a.kind);
  }
  const auto report = mask::validate(m);
  if (!report.ok()) throw std::runtime_error("generated mask failed validation");
  prepare_output(a.out);
  mask::save_mask(a.out, m);
  std::cout << "mask " << m.frames() << "x" << m.height() << "x" << m.width() << " lambda " << m.lambda()
            << (m.structural() ? " structural" : " binary") << " -> " << a.out.string() << '\n';
  return 0;
}

// gen-scene ----------------------------------------------------------------

struct GenSceneArgs {
  std::string kind = "moving-square";
  int frames = 8, height = 32, width = 32;
  double size = 0.3, velocity = 1.0, low = 0.0, high = 1.0;
  bool flat = false;
  fs::path out;
};

int gen_scene(const GenSceneArgs& a, const Globals& g) {
  const auto kind = scenes::parse_scene_kind(a.kind);
  if (!kind) throw UsageError("unknown scene kind: " + a.kind);
  scenes::SyntheticScene spec;
  spec.kind = *kind;
  spec.size = a.size;
  spec.velocity = a.velocity;
  spec.brightness_low = a.low;
  spec.brightness_high = a.high;
  spec.gradient_background = !a.flat;
  const VideoCube video = scenes::synthesize_scene(spec, a.frames, a.height, a.width, g.resolved_seed());
  prepare_output(a.out);
  io::save_video(a.out, video);
  std::cout << "scene " << a.kind << " " << a.frames << "x" << a.height << "x" << a.width << " -> "
            << a.out.string() << '\n';
  return 0;
}

// encode -------------------------------------------------------------------

struct EncodeArgs {
  fs::path video, mask, out, pgm;
  int kappa = 8;
  double noise = 0.0;
  std::string aperture = "1";
};

int encode(const EncodeArgs& a, const Globals& g) {
  require_file(a.video, "video");
  require_file(a.mask, "mask");
  const VideoCube video = io::load_video(a.video);
  const mask::MaskCube m = mask::load_mask(a.mask);
  double aperture = 1.0;
  if (a.aperture == "auto") {
    aperture = sensor::auto_aperture(m);
    std::cerr << "auto aperture: " << aperture << '\n';
  } else {
    try {
      aperture = std::stod(a.aperture);
    } catch (const std::exception&) {
      throw UsageError("--aperture must be a number or 'auto'");
    }
    if (!(aperture > 0.0)) throw UsageError("--aperture must be > 0");
  }
  sensor::SensorModel s;
  s.kappa = a.kappa;
  s.noise_sigma = a.noise;
  s.seed = g.resolved_seed();
  const Measurement y = sensor::encode(video, m, s, aperture);
  prepare_output(a.out);
  io::save_measurement(a.out, y, aperture);
  if (!a.pgm.empty()) write_pgm(a.pgm, y);
  std::cout << "measurement " << y.height() << "x" << y.width() << " kappa " << y.kappa() << " -> "
            << a.out.string() << '\n';
  return 0;
}

// decode -------------------------------------------------------------------

struct DecodeArgs {
  fs::path measurement, mask, checkpoint, out, truth;
  std::string decoder = "gaptv";
  int iterations = 100;
  double tv_weight = 0.07;
  bool accelerate = false;
};

int decode(const DecodeArgs& a, const Globals&) {
  if (a.decoder == "res2former" && a.checkpoint.empty()) throw UsageError("res2former decoding needs --checkpoint");
  if (a.decoder != "gaptv" && a.decoder != "res2former") throw UsageError("unknown decoder: " + a.decoder);
  require_file(a.measurement, "measurement");
  require_file(a.mask, "mask");
  const mask::MaskCube m = mask::load_mask(a.mask);
  const Image y = irradiance(a.measurement);

  VideoCube video;
  if (a.decoder == "gaptv") {
    gaptv::GapTvConfig cfg;
    cfg.iterations = a.iterations;
    cfg.tv_weight = a.tv_weight;
    cfg.accelerate = a.accelerate;
    video = gaptv::gap_tv_decode(y, m, cfg);
  } else {
    require_file(a.checkpoint, "checkpoint");
    const pipeline::Model model = pipeline::load_model(a.checkpoint);
    ad::NoGradGuard guard;
    const VideoCube coarse = sensor::coarse_estimate(y, m);
    const ad::Tensor plane = ad::Tensor::from({y.height, y.width}, y.data);
    video = pipeline::to_video(model.decoder.forward(pipeline::to_tensor(coarse), plane));
  }
  prepare_output(a.out);
  io::save_video(a.out, video);
  std::cout << "video " << video.frames() << "x" << video.height() << "x" << video.width() << " -> "
            << a.out.string() << '\n';
  if (!a.truth.empty()) {
    require_file(a.truth, "ground truth");
    const VideoCube truth = io::load_video(a.truth);
    std::cout << "psnr " << metrics::psnr(video, truth).mean << '\n';
  }
  return 0;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  fs::path config, out = "run", resume;
  std::optional<std::int64_t> steps;
  std::optional<int> samples, lambda, kappa, frames, height, width, batch;
  std::optional<double> noise, lr_initial, lr_final;
  std::optional<std::string> encoder, mask_mode;
  std::optional<std::int64_t> validate_every, checkpoint_every;
};

pipeline::TrainConfig train_config(const TrainArgs& a, const Globals& g) {
  pipeline::TrainConfig c = pipeline::toy_train_config();
  if (!a.config.empty()) {
    require_file(a.config, "config");
    std::ifstream in(a.config);
    std::stringstream ss;
    ss << in.rdbuf();
    c = pipeline::TrainConfig::from_json(ss.str());
  }
  c.seed = g.resolved_seed();
  if (a.steps) c.steps = *a.steps;
  if (a.samples) c.samples = *a.samples;
  if (a.lambda) c.lambda = *a.lambda;
  if (a.kappa) c.kappa = *a.kappa;
  if (a.batch) c.batch_size = *a.batch;
  if (a.frames) c.decoder.frames = *a.frames;
  if (a.height) c.decoder.height = *a.height;
  if (a.width) c.decoder.width = *a.width;
  if (a.noise) c.noise_sigma = *a.noise;
  if (a.lr_initial) c.lr_initial = *a.lr_initial;
  if (a.lr_final) c.lr_final = *a.lr_final;
  if (a.validate_every) c.validate_every = *a.validate_every;
  if (a.checkpoint_every) c.checkpoint_every = *a.checkpoint_every;
  if (a.encoder) {
    const auto v = pipeline::parse_encoder(*a.encoder);
    if (!v) throw UsageError("unknown encoder variant: " + *a.encoder);
    c.encoder = *v;
    if (*v != pipeline::EncoderVariant::ls_with_sr) c.mask_mode = pipeline::MaskMode::random;
  }
  if (a.mask_mode) {
    const auto m = pipeline::parse_mask_mode(*a.mask_mode);
    if (!m) throw UsageError("unknown mask mode: " + *a.mask_mode);
    c.mask_mode = *m;
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

int train(const TrainArgs& a, const Globals& g) {
  fs::create_directories(a.out);
  const fs::path ckpt = a.out / "model.ckpt";
  const fs::path log_path = a.out / "log.csv";

  std::optional<pipeline::Trainer> trainer;
  if (!a.resume.empty()) {
    require_file(a.resume, "checkpoint");
    const pipeline::Model saved = pipeline::load_model(a.resume);
    const auto& d = saved.config.decoder;
    trainer.emplace(pipeline::Trainer::resume(
        a.resume, synthetic_set(saved.config.samples, d, saved.config.seed, kTrainScenes),
        synthetic_set(saved.config.validation_samples, d, saved.config.seed, kValidationScenes)));
  } else {
    const pipeline::TrainConfig c = train_config(a, g);
    trainer.emplace(c, synthetic_set(c.samples, c.decoder, c.seed, kTrainScenes),
                    synthetic_set(c.validation_samples, c.decoder, c.seed, kValidationScenes));
  }

  const bool append = !a.resume.empty() && fs::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  if (!append) log << pipeline::log_csv_header();
  const std::int64_t every = trainer->config().checkpoint_every;
  trainer->run([&](const pipeline::LogRow& row) {
    log << pipeline::log_csv_row(row);
    if (row.val_psnr) std::cout << "step " << row.step << " loss " << row.loss << " val_psnr " << *row.val_psnr << '\n';
    if (every > 0 && row.step % every == 0) trainer->save(ckpt);
  });
  log.flush();
  trainer->save(ckpt);
  mask::save_mask(a.out / "mask.scit", trainer->mask());
  std::cout << "trained " << trainer->step() << " steps (" << pipeline::to_string(trainer->config().encoder)
            << ") -> " << ckpt.string() << '\n';
  return 0;
}

// eval ---------------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint, out;
  std::optional<std::string> train_enc;
  std::string test_enc;
  int count = 4;
};

int eval(const EvalArgs& a, const Globals& g) {
  require_file(a.checkpoint, "checkpoint");
  const pipeline::Model model = pipeline::load_model(a.checkpoint);
  if (a.train_enc) {
    const auto v = pipeline::parse_encoder(*a.train_enc);
    if (!v) throw UsageError("unknown encoder variant: " + *a.train_enc);
    if (*v != model.config.encoder) {
      throw std::runtime_error("checkpoint was trained with " + pipeline::to_string(model.config.encoder) +
                               ", not " + *a.train_enc);
    }
  }
  auto test = model.config.encoder;
  if (!a.test_enc.empty()) {
    const auto v = pipeline::parse_encoder(a.test_enc);
    if (!v) throw UsageError("unknown encoder variant: " + a.test_enc);
    test = *v;
  }
  const std::uint64_t seed = g.resolved_seed();
  const auto scenes = synthetic_set(a.count, model.config.decoder, seed, kTestScenes);
  const auto settings = pipeline::encoder_settings(test, model.mask, model.config.kappa, model.config.noise_sigma);
  const auto report = pipeline::evaluate(model.decoder, model.mask, settings, scenes, derive_seed(seed, 1));

  std::ostringstream row;
  row.precision(10);
  row << "train_enc,test_enc,psnr,ssim\n"
      << pipeline::to_string(model.config.encoder) << ',' << pipeline::to_string(test) << ',' << report.psnr.mean
      << ',' << report.ssim.mean << '\n';
  std::cout << row.str();
  if (!a.out.empty()) {
    prepare_output(a.out);
    metrics::write_text(a.out, row.str());
    fs::path frames = a.out;
    frames.replace_extension(".frames.csv");
    metrics::write_text(frames, report.to_csv());
  }
  return 0;
}

// ablate -------------------------------------------------------------------

struct AblateArgs {
  std::vector<int> lambdas{1, 2, 3, 4};
  std::int64_t steps = 2000;
  int samples = 8;
  fs::path out;
};

int ablate(const AblateArgs& a, const Globals& g) {
  pipeline::TrainConfig base = pipeline::toy_train_config();
  base.seed = g.resolved_seed();
  base.steps = a.steps;
  base.samples = a.samples;
  for (int l : a.lambdas) {
    if (l < 1 || l > 8) throw UsageError("lambdas must be in [1, 8]");
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto rows = pipeline::ablation_bitdepth(
      a.lambdas, base, synthetic_set(base.samples, base.decoder, base.seed, kTrainScenes),
      synthetic_set(base.validation_samples, base.decoder, base.seed, kValidationScenes));
  const std::string csv = pipeline::ablation_csv(rows);
  std::cout << csv;
  if (!a.out.empty()) {
    prepare_output(a.out);
    metrics::write_text(a.out, csv);
  }
  return 0;
}

// analyze-dr ---------------------------------------------------------------

struct AnalyzeArgs {
  fs::path mask, reference, reconstruction, out;
  int kappa = 8;
  std::string aperture = "auto";
};

int analyze_dr(const AnalyzeArgs& a, const Globals&) {
  require_file(a.mask, "mask");
  const mask::MaskCube m = mask::load_mask(a.mask);
  std::optional<double> aperture;
  if (a.aperture == "auto") {
    if (!m.structural()) aperture = sensor::auto_aperture(m);
  } else if (a.aperture != "none") {
    try {
      aperture = std::stod(a.aperture);
    } catch (const std::exception&) {
      throw UsageError("--aperture must be a number, 'auto' or 'none'");
    }
  }
  auto levels = mask::effective_levels(m, a.kappa, aperture);
  double mean = 0.0;
  for (auto l : levels) mean += static_cast<double>(l);
  mean /= static_cast<double>(levels.size());
  json summary{{"kappa", a.kappa}, {"lambda", m.lambda()}, {"structural", m.structural()},
               {"mean_effective_levels", mean}};
  if (aperture) summary["aperture"] = *aperture;

  std::string csv;
  if (!a.reference.empty() || !a.reconstruction.empty()) {
    if (a.reference.empty() || a.reconstruction.empty()) {
      throw UsageError("--reference and --reconstruction go together");
    }
    require_file(a.reference, "reference");
    require_file(a.reconstruction, "reconstruction");
    const auto report = metrics::dynamic_range_report(io::load_video(a.reconstruction), io::load_video(a.reference), a.kappa);
    summary["reconstruction"] = json::parse(report.to_json());
    csv = report.to_csv();
  } else {
    std::sort(levels.begin(), levels.end());
    std::ostringstream os;
    os << "decile,effective_levels\n";
    for (int d = 1; d <= 10; ++d) {
      const std::size_t idx = std::min(levels.size() - 1, (levels.size() * static_cast<std::size_t>(d)) / 10);
      os << d << ',' << levels[d == 10 ? levels.size() - 1 : idx] << '\n';
    }
    csv = os.str();
  }
  std::cout << summary.dump(2) << '\n';
  if (!a.out.empty()) {
    prepare_output(a.out);
    metrics::write_text(a.out, csv);
  }
  return 0;
}

// export-dmd ---------------------------------------------------------------

struct ExportArgs {
  fs::path mask, out;
};

int export_dmd(const ExportArgs& a, const Globals&) {
  require_file(a.mask, "mask");
  const mask::MaskCube m = mask::load_mask(a.mask);
  const auto report = mask::validate(m);
  if (!report.ok()) {
    throw std::runtime_error("mask has " + std::to_string(report.grid_violations()) + " grid and " +
                             std::to_string(report.sum_violations()) + " sum violations");
  }
  prepare_output(a.out);
  mask::export_dmd(m, a.out);
  std::cout << "dmd planes " << static_cast<std::size_t>(m.frames()) * m.lambda() << " -> " << a.out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Snapshot compressive imaging codec toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (falls back to $SCI_SEED, then 0)");
  app.add_option("--threads", g.threads, "Worker threads for numeric kernels")->check(CLI::Range(1, 256));

  std::function<int()> action;

  GenMaskArgs gm;
  auto* c_gm = app.add_subcommand("gen-mask", "Generate a binary or structural mask");
  c_gm->add_option("--kind", gm.kind, "binary | structural-random | structural-learned")
      ->check(CLI::IsMember({"binary", "structural-random", "structural-learned"}));
  c_gm->add_option("-B,--frames", gm.frames)->check(CLI::Range(1, 4096));
  c_gm->add_option("-H,--height", gm.height)->check(CLI::Range(1, 1 << 15));
  c_gm->add_option("-W,--width", gm.width)->check(CLI::Range(1, 1 << 15));
  c_gm->add_option("--lambda", gm.lambda)->check(CLI::Range(1, 8));
  c_gm->add_option("--p", gm.p, "Open probability of binary masks")->check(CLI::Range(0.0, 1.0));
  c_gm->add_option("--checkpoint", gm.checkpoint, "Training checkpoint (structural-learned)");
  c_gm->add_option("-o,--out", gm.out)->required();
  c_gm->callback([&] { action = [&] { return gen_mask(gm, g); }; });

  GenSceneArgs gs;
  auto* c_gs = app.add_subcommand("gen-scene", "Synthesize a video cube");
  c_gs->add_option("--kind", gs.kind, "moving-square | bouncing-disc | drifting-texture");
  c_gs->add_option("-B,--frames", gs.frames)->check(CLI::Range(1, 4096));
  c_gs->add_option("-H,--height", gs.height)->check(CLI::Range(1, 1 << 15));
  c_gs->add_option("-W,--width", gs.width)->check(CLI::Range(1, 1 << 15));
  c_gs->add_option("--size", gs.size);
  c_gs->add_option("--velocity", gs.velocity);
  c_gs->add_option("--low", gs.low);
  c_gs->add_option("--high", gs.high);
  c_gs->add_flag("--flat", gs.flat, "Constant background at --low, object at --high");
  c_gs->add_option("-o,--out", gs.out)->required();
  c_gs->callback([&] { action = [&] { return gen_scene(gs, g); }; });

  EncodeArgs en;
  auto* c_en = app.add_subcommand("encode", "Simulate a snapshot measurement");
  c_en->add_option("--video", en.video)->required();
  c_en->add_option("--mask", en.mask)->required();
  c_en->add_option("--kappa", en.kappa)->check(CLI::Range(1, 16));
  c_en->add_option("--noise", en.noise)->check(CLI::NonNegativeNumber);
  c_en->add_option("--aperture", en.aperture, "Irradiance gain, or 'auto'");
  c_en->add_option("--pgm", en.pgm, "Also write the measurement as a PGM image");
  c_en->add_option("-o,--out", en.out)->required();
  c_en->callback([&] { action = [&] { return encode(en, g); }; });

  DecodeArgs de;
  auto* c_de = app.add_subcommand("decode", "Reconstruct a video from a measurement");
  c_de->add_option("--measurement", de.measurement)->required();
  c_de->add_option("--mask", de.mask)->required();
  c_de->add_option("--decoder", de.decoder, "gaptv | res2former")->check(CLI::IsMember({"gaptv", "res2former"}));
  c_de->add_option("--checkpoint", de.checkpoint);
  c_de->add_option("--iterations", de.iterations)->check(CLI::Range(1, 100000));
  c_de->add_option("--tv-weight", de.tv_weight)->check(CLI::PositiveNumber);
  c_de->add_flag("--accelerate", de.accelerate);
  c_de->add_option("--truth", de.truth, "Ground-truth video; prints PSNR");
  c_de->add_option("-o,--out", de.out)->required();
  c_de->callback([&] { action = [&] { return decode(de, g); }; });

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Jointly train mask and decoder on synthetic scenes");
  c_tr->add_option("--config", tr.config, "TrainConfig JSON");
  c_tr->add_option("--steps", tr.steps);
  c_tr->add_option("--samples", tr.samples);
  c_tr->add_option("--batch", tr.batch);
  c_tr->add_option("--lambda", tr.lambda);
  c_tr->add_option("--kappa", tr.kappa);
  c_tr->add_option("-B,--frames", tr.frames);
  c_tr->add_option("-H,--height", tr.height);
  c_tr->add_option("-W,--width", tr.width);
  c_tr->add_option("--noise", tr.noise);
  c_tr->add_option("--lr-initial", tr.lr_initial);
  c_tr->add_option("--lr-final", tr.lr_final);
  c_tr->add_option("--encoder", tr.encoder, "RBw/oSR | RBw/SR | LSw/SR");
  c_tr->add_option("--mask-mode", tr.mask_mode, "learned | random");
  c_tr->add_option("--validate-every", tr.validate_every);
  c_tr->add_option("--checkpoint-every", tr.checkpoint_every);
  c_tr->add_option("--resume", tr.resume, "Continue from a checkpoint");
  c_tr->add_option("-o,--out", tr.out, "Output directory");
  c_tr->callback([&] { action = [&] { return train(tr, g); }; });

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint under an encoder variant");
  c_ev->add_option("--checkpoint", ev.checkpoint)->required();
  c_ev->add_option("--train-enc", ev.train_enc);
  c_ev->add_option("--test-enc", ev.test_enc);
  c_ev->add_option("--count", ev.count, "Test scenes")->check(CLI::Range(1, 100000));
  c_ev->add_option("-o,--out", ev.out);
  c_ev->callback([&] { action = [&] { return eval(ev, g); }; });

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Learned vs random structural masks across bit depths");
  c_ab->add_option("--lambdas", ab.lambdas)->delimiter(',');
  c_ab->add_option("--steps", ab.steps)->check(CLI::PositiveNumber);
  c_ab->add_option("--samples", ab.samples)->check(CLI::PositiveNumber);
  c_ab->add_option("-o,--out", ab.out);
  c_ab->callback([&] { action = [&] { return ablate(ab, g); }; });

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze-dr", "Effective dynamic range of a mask or reconstruction");
  c_an->add_option("--mask", an.mask)->required();
  c_an->add_option("--kappa", an.kappa)->check(CLI::Range(1, 16));
  c_an->add_option("--aperture", an.aperture, "auto | none | gain");
  c_an->add_option("--reference", an.reference);
  c_an->add_option("--reconstruction", an.reconstruction);
  c_an->add_option("-o,--out", an.out, "Per-decile CSV");
  c_an->callback([&] { action = [&] { return analyze_dr(an, g); }; });

  ExportArgs ex;
  auto* c_ex = app.add_subcommand("export-dmd", "Write DMD bit-plane sequences");
  c_ex->add_option("--mask", ex.mask)->required();
  c_ex->add_option("-o,--out", ex.out)->required();
  c_ex->callback([&] { action = [&] { return export_dmd(ex, g); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    set_thread_count(g.threads);
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
