#include "dtp/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"

#include "dtp/eval.hpp"
#include "dtp/io.hpp"
#include "dtp/protocol.hpp"
#include "dtp/serde.hpp"

namespace dtp::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStreamGen = 0x47454e00;     // "GEN"
constexpr std::uint64_t kStreamSample = 0x534d5000;  // "SMP"
constexpr std::uint64_t kStreamEval = 0x45564c00;    // "EVL"
constexpr std::uint64_t kStreamBoot = 0x424f4f00;    // "BOO"
constexpr std::uint64_t kStreamPrior = 0x50524900;   // "PRI"

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return json::parse(in);
}

std::string indexed_path(const std::string& prefix, int index,
                         const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%03d%s", index, ext);
  return prefix + buf;
}

const std::vector<scene::SceneSample>& pick_split(const io::DatasetFile& ds,
                                                  const std::string& split) {
  if (split == "train") return ds.data.train;
  if (split == "test") return ds.data.test;
  throw std::runtime_error("unknown split: " + split);
}

const scene::SceneSample& pick_image(const io::DatasetFile& ds,
                                     const std::string& split, int index) {
  const auto& samples = pick_split(ds, split);
  if (index < 0 || static_cast<std::size_t>(index) >= samples.size())
    throw std::runtime_error("image index " + std::to_string(index) +
                             " out of range for split '" + split + "' (" +
                             std::to_string(samples.size()) + " images)");
  return samples[static_cast<std::size_t>(index)];
}

io::Checkpoint load_model(const std::string& path, const io::DatasetFile& ds) {
  io::Checkpoint ckpt = io::load_checkpoint(path);
  if (ckpt.config.height != ds.data.spec.height ||
      ckpt.config.width != ds.data.spec.width ||
      ckpt.config.coeffs_per_axis != ds.coeffs_per_axis ||
      ckpt.config.feature_channels != ds.data.spec.feature_channels())
    throw std::runtime_error("model " + path +
                             " does not match dataset dimensions");
  return ckpt;
}

// Validation images for bandwidth selection come from the tail of the
// training split, so they never overlap evaluation data.
std::vector<scene::SceneSample> validation_images(const io::DatasetFile& ds,
                                                  int count) {
  const auto& train = ds.data.train;
  if (train.empty()) throw std::runtime_error("dataset has no training split");
  const std::size_t n =
      std::min<std::size_t>(static_cast<std::size_t>(count), train.size());
  return {train.end() - static_cast<std::ptrdiff_t>(n), train.end()};
}

struct GenDataOpts {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  int n_train = 2000;
  int n_test = 200;
  int k = 5;
};

void run_gen_data(const GenDataOpts& o, std::ostream& out) {
  const json cfg = load_config(o.config);
  scene::SceneSpec spec = cfg.contains("scene")
                              ? cfg.at("scene").get<scene::SceneSpec>()
                              : scene::SceneSpec::defaults();
  const int n_train = cfg.value("n_train", o.n_train);
  const int n_test = cfg.value("n_test", o.n_test);
  const int k = cfg.value("K", o.k);
  if (k < 1 || k > spec.horizon)
    throw std::runtime_error("K must lie in [1, T]");
  io::DatasetFile file;
  file.data = scene::build_dataset(spec, n_train, n_test,
                                   derive_seed(o.seed, kStreamGen));
  file.data.seed = o.seed;
  file.coeffs_per_axis = k;
  io::write_dataset(file, o.out);
  out << "wrote " << o.out << " (" << n_train << " train, " << n_test
      << " test)\n";
}

struct TrainOpts {
  std::string data;
  std::string model_kind = "cvae";
  std::string out;
  std::string config;
  std::string history;
  std::uint64_t seed = 0;
  int epochs = -1;
};

void run_train(const TrainOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  if (ds.data.train.empty())
    throw std::runtime_error("dataset has no training samples: " + o.data);
  const json cfg = load_config(o.config);

  cvae::CvaeConfig model_cfg;
  if (cfg.contains("model")) model_cfg = cfg.at("model").get<cvae::CvaeConfig>();
  model_cfg.height = ds.data.spec.height;
  model_cfg.width = ds.data.spec.width;
  model_cfg.coeffs_per_axis = ds.coeffs_per_axis;
  model_cfg.feature_channels = ds.data.spec.feature_channels();
  model_cfg.validate();

  train::TrainConfig tc;
  if (cfg.contains("train")) tc = cfg.at("train").get<train::TrainConfig>();
  tc.seed = o.seed;
  if (o.epochs > 0) tc.epochs = o.epochs;

  cvae::ModelKind kind;
  if (o.model_kind == "cvae") {
    kind = cvae::ModelKind::Cvae;
  } else if (o.model_kind == "regressor") {
    kind = cvae::ModelKind::Regressor;
  } else {
    throw std::runtime_error("unknown model kind: " + o.model_kind);
  }

  train::CheckpointSink sink;
  if (tc.checkpoint_every > 0) {
    sink = [&](int epoch, const nn::ParamStore& params) {
      io::Checkpoint ckpt{kind, model_cfg, tc, params};
      io::write_checkpoint(ckpt, indexed_path(o.out, epoch, ".dtpc"));
    };
  }

  const auto result = train::train(ds.data.train, kind, model_cfg, tc, sink);
  io::Checkpoint ckpt{kind, model_cfg, tc, result.params};
  io::write_checkpoint(ckpt, o.out);
  out << "wrote " << o.out << " (final loss "
      << io::format_real(result.history.epochs.back().total) << ")\n";

  if (!o.history.empty()) {
    const std::vector<std::string> header = {"epoch", "total",  "dir",
                                             "mag_x", "mag_y", "kl"};
    std::vector<io::CsvRow> rows;
    for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
      const auto& b = result.history.epochs[e];
      rows.push_back({static_cast<std::int64_t>(e), b.total, b.direction,
                      b.mag_x, b.mag_y, b.kl});
    }
    io::emit_csv(header, rows, o.history);
    out << "wrote " << o.history << "\n";
  }
}

struct SampleOpts {
  std::string model;
  std::string data;
  std::string split = "test";
  int image_index = 0;
  int n = 5;
  std::uint64_t seed = 0;
  std::string out_prefix = "sample";
};

void run_sample(const SampleOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  const io::Checkpoint ckpt = load_model(o.model, ds);
  const auto& image = pick_image(ds, o.split, o.image_index);
  const auto preds =
      cvae::sample_predictions(ckpt.config, ckpt.params, image.features, o.n,
                               derive_seed(o.seed, kStreamSample));
  for (int i = 0; i < o.n; ++i) {
    const auto field = cvae::prediction_to_field(ckpt.config, preds[i],
                                                 ds.data.spec.horizon);
    const auto path = indexed_path(o.out_prefix, i, ".svg");
    io::render_trajectory_svg(field, path);
    out << "wrote " << path << "\n";
  }
}

struct EvalNllOpts {
  std::string data;
  std::string cvae_model;
  std::string regressor_model;
  std::string out;
  std::string bandwidth_fit = "test";
  std::uint64_t seed = 0;
  int n_samples = 800;
  int val_images = 50;
  int n_boot = 1000;
};

void append_nll_rows(std::vector<io::CsvRow>& rows, const std::string& method,
                     int n, const protocol::NllResult& res) {
  rows.push_back({method, std::string("nll"), static_cast<std::int64_t>(n),
                  io::CsvValue(res.nll)});
  rows.push_back({method, std::string("mean_ll"), static_cast<std::int64_t>(n),
                  io::CsvValue(res.mean_ll)});
  rows.push_back({method, std::string("se_boot"), static_cast<std::int64_t>(n),
                  io::CsvValue(res.se)});
  rows.push_back({method, std::string("h_dir"), static_cast<std::int64_t>(n),
                  io::CsvValue(res.h_dir)});
  rows.push_back({method, std::string("h_mag"), static_cast<std::int64_t>(n),
                  io::CsvValue(res.h_mag)});
  rows.push_back({method, std::string("bandwidth_fit"),
                  static_cast<std::int64_t>(n), io::CsvValue(res.bandwidth_fit)});
}

void run_eval_nll(const EvalNllOpts& o, std::ostream& out) {
  if (o.bandwidth_fit != "val" && o.bandwidth_fit != "test")
    throw std::runtime_error("--bandwidth-fit must be 'val' or 'test'");
  const bool fit_on_test = o.bandwidth_fit == "test";
  const io::DatasetFile ds = io::load_dataset(o.data);
  if (ds.data.test.empty())
    throw std::runtime_error("dataset has no test samples: " + o.data);
  const int k = ds.coeffs_per_axis;
  const auto val_images = validation_images(ds, o.val_images);
  const auto val = protocol::prepare_split(val_images, k);
  const auto test = protocol::prepare_split(ds.data.test, k);
  eval::ParzenConfig pc;
  pc.n_samples = o.n_samples;

  std::vector<std::string> header = {"method", "metric", "n", "value"};
  std::vector<io::CsvRow> rows;

  {
    const io::Checkpoint cv = load_model(o.cvae_model, ds);
    const auto val_dists = protocol::model_parzen_dists(
        cv.config, cv.params, val_images, val, pc.n_samples,
        derive_seed(o.seed, kStreamEval, 1));
    const auto test_dists = protocol::model_parzen_dists(
        cv.config, cv.params, ds.data.test, test, pc.n_samples,
        derive_seed(o.seed, kStreamEval, 2));
    const auto res = protocol::parzen_protocol(
        val_dists, test_dists, pc, o.n_boot, derive_seed(o.seed, kStreamBoot, 1));
    append_nll_rows(rows, "cvae", pc.n_samples, res);
  }

  if (!o.regressor_model.empty()) {
    const io::Checkpoint rg = load_model(o.regressor_model, ds);
    std::vector<eval::DirMag> val_out(val_images.size());
    for (std::size_t i = 0; i < val_images.size(); ++i)
      val_out[i] = cvae::regressor_forward(rg.config, rg.params,
                                           val_images[i].features);
    std::vector<eval::DirMag> test_out(ds.data.test.size());
    for (std::size_t i = 0; i < ds.data.test.size(); ++i)
      test_out[i] = cvae::regressor_forward(rg.config, rg.params,
                                            ds.data.test[i].features);
    const auto res = protocol::single_gaussian_protocol(
        val_out, val, test_out, test, pc, fit_on_test, o.n_boot,
        derive_seed(o.seed, kStreamBoot, 2));
    append_nll_rows(rows, "regressor", 1, res);
  }

  {
    std::vector<eval::DirMag> val_out(val_images.size());
    for (std::size_t i = 0; i < val_images.size(); ++i)
      val_out[i] = protocol::dirmag_of_field(
          eval::constant_velocity_from_truth(val_images[i].truth), k);
    std::vector<eval::DirMag> test_out(ds.data.test.size());
    for (std::size_t i = 0; i < ds.data.test.size(); ++i)
      test_out[i] = protocol::dirmag_of_field(
          eval::constant_velocity_from_truth(ds.data.test[i].truth), k);
    const auto res = protocol::single_gaussian_protocol(
        val_out, val, test_out, test, pc, fit_on_test, o.n_boot,
        derive_seed(o.seed, kStreamBoot, 3));
    append_nll_rows(rows, "const_velocity", 1, res);
  }

  io::emit_csv(header, rows, o.out);
  out << "wrote " << o.out << "\n";
}

struct EvalMinedOpts {
  std::string data;
  std::string cvae_model;
  std::string regressor_model;
  std::string out;
  std::string bandwidth_fit = "test";
  std::uint64_t seed = 0;
  int n_max = 20;
  int val_images = 50;
};

void run_eval_mined(const EvalMinedOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  if (ds.data.test.empty())
    throw std::runtime_error("dataset has no test samples: " + o.data);
  const int k = ds.coeffs_per_axis;
  const auto test = protocol::prepare_split(ds.data.test, k);

  std::vector<std::string> header = {"method", "metric", "n", "value"};
  std::vector<io::CsvRow> rows;
  auto append_curve = [&](const std::string& method,
                          const eval::MinEdCurve& curve) {
    for (std::size_t n = 0; n < curve.mean_min_distance.size(); ++n)
      rows.push_back({method, std::string("min_ed"),
                      static_cast<std::int64_t>(n + 1),
                      io::CsvValue(curve.mean_min_distance[n])});
  };

  {
    const io::Checkpoint cv = load_model(o.cvae_model, ds);
    const eval::SpectralSampler sampler =
        [&](std::size_t i, int n, std::uint64_t seed) {
          const auto preds = cvae::sample_predictions(
              cv.config, cv.params, ds.data.test[i].features, n, seed);
          std::vector<std::vector<double>> vecs(preds.size());
          for (std::size_t j = 0; j < preds.size(); ++j)
            vecs[j] = cvae::prediction_spectral_vec(preds[j]);
          return vecs;
        };
    append_curve("cvae",
                 eval::min_ed_curve(sampler, test.spectral, o.n_max,
                                    derive_seed(o.seed, kStreamEval, 11)));
  }

  if (!o.regressor_model.empty()) {
    const io::Checkpoint rg = load_model(o.regressor_model, ds);
    std::vector<eval::DirMag> test_out(ds.data.test.size());
    for (std::size_t i = 0; i < ds.data.test.size(); ++i)
      test_out[i] = cvae::regressor_forward(rg.config, rg.params,
                                            ds.data.test[i].features);
    // Sampling bandwidths come from the same grid search as the likelihood
    // protocol.
    const auto val_images_v = validation_images(ds, o.val_images);
    const auto val = protocol::prepare_split(val_images_v, k);
    std::vector<eval::DirMag> val_out(val_images_v.size());
    for (std::size_t i = 0; i < val_images_v.size(); ++i)
      val_out[i] = cvae::regressor_forward(rg.config, rg.params,
                                           val_images_v[i].features);
    eval::ParzenConfig pc;
    const auto fitted = protocol::single_gaussian_protocol(
        val_out, val, test_out, test, pc, o.bandwidth_fit == "test", 2,
        derive_seed(o.seed, kStreamBoot, 4));

    const eval::SpectralSampler sampler =
        [&](std::size_t i, int n, std::uint64_t seed) {
          const auto draws = eval::gaussian_sampler_around(
              test_out[i], fitted.h_dir, fitted.h_mag, n, seed);
          std::vector<std::vector<double>> vecs(draws.size());
          for (std::size_t j = 0; j < draws.size(); ++j)
            vecs[j] = cvae::prediction_spectral_vec(draws[j]);
          return vecs;
        };
    append_curve("regressor",
                 eval::min_ed_curve(sampler, test.spectral, o.n_max,
                                    derive_seed(o.seed, kStreamEval, 12)));

    const eval::SpectralSampler direct =
        [&](std::size_t i, int n, std::uint64_t) {
          return std::vector<std::vector<double>>(
              n, cvae::prediction_spectral_vec(test_out[i]));
        };
    append_curve("regressor_direct",
                 eval::min_ed_curve(direct, test.spectral, o.n_max, 0));
  }

  {
    const eval::SpectralSampler cv_sampler =
        [&](std::size_t i, int n, std::uint64_t) {
          return std::vector<std::vector<double>>(
              n, protocol::spectral_vec_of_field(
                     eval::constant_velocity_from_truth(ds.data.test[i].truth),
                     k));
        };
    append_curve("const_velocity",
                 eval::min_ed_curve(cv_sampler, test.spectral, o.n_max, 0));
  }

  io::emit_csv(header, rows, o.out);
  out << "wrote " << o.out << "\n";
}

struct ClusterOpts {
  std::string model;
  std::string data;
  std::string split = "test";
  int image_index = 0;
  int k = 10;
  int n = 800;
  std::uint64_t seed = 0;
  std::string out;
  std::string render_prefix;
};

void run_cluster(const ClusterOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  const io::Checkpoint ckpt = load_model(o.model, ds);
  const auto& image = pick_image(ds, o.split, o.image_index);
  const auto preds =
      cvae::sample_predictions(ckpt.config, ckpt.params, image.features, o.n,
                               derive_seed(o.seed, kStreamSample, 1));
  std::vector<std::vector<double>> vecs(preds.size());
  for (std::size_t j = 0; j < preds.size(); ++j)
    vecs[j] = cvae::prediction_spectral_vec(preds[j]);
  const auto report =
      eval::kmeans_cluster(vecs, o.k, derive_seed(o.seed, kStreamSample, 2));

  std::ofstream rf(o.out);
  if (!rf) throw std::runtime_error("cannot open for writing: " + o.out);
  rf << "image_index=" << o.image_index << " split=" << o.split
     << " k=" << o.k << " n=" << o.n << " seed=" << o.seed << "\n";
  for (int rank = 0; rank < o.k; ++rank) {
    const int c = report.by_magnitude[rank];
    rf << "cluster rank=" << (rank + 1) << " id=" << c
       << " count=" << report.counts[c]
       << " magnitude=" << io::format_real(report.mean_magnitude[c]) << "\n";
  }
  if (!rf) throw std::runtime_error("write failed: " + o.out);
  out << "wrote " << o.out << "\n";

  if (!o.render_prefix.empty()) {
    const int top = std::min(2, o.k);
    for (int rank = 0; rank < top; ++rank) {
      const int c = report.by_magnitude[rank];
      const auto spec_field = codec::SpectralField::from_channel_major(
          report.centroids[c], ckpt.config.height, ckpt.config.width,
          ckpt.config.coeffs_per_axis);
      const auto field = codec::decode_field(spec_field, ds.data.spec.horizon);
      const auto path = indexed_path(o.render_prefix, rank, ".svg");
      io::render_trajectory_svg(field, path);
      out << "wrote " << path << "\n";
    }
  }
}

struct InterpolateOpts {
  std::string model;
  std::string data;
  std::string split = "test";
  int image_index = 0;
  int steps = 5;
  int encode_a = -1;
  int encode_b = -1;
  std::uint64_t seed = 0;
  std::string out_prefix = "interp";
};

void run_interpolate(const InterpolateOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  const io::Checkpoint ckpt = load_model(o.model, ds);
  if (ckpt.kind != cvae::ModelKind::Cvae)
    throw std::runtime_error("interpolate requires a cvae checkpoint");
  const auto& image = pick_image(ds, o.split, o.image_index);

  std::vector<double> z_a, z_b;
  if (o.encode_a >= 0 || o.encode_b >= 0) {
    if (o.encode_a < 0 || o.encode_b < 0)
      throw std::runtime_error(
          "--encode-a and --encode-b must be given together");
    auto posterior_mean = [&](int index) {
      const auto& s = pick_image(ds, o.split, index);
      const auto code =
          cvae::image_tower(ckpt.config, ckpt.params, s.features);
      const auto target =
          cvae::prepare_target(s.truth, ckpt.config.coeffs_per_axis);
      return cvae::encode(ckpt.config, ckpt.params, code, target).mu;
    };
    z_a = posterior_mean(o.encode_a);
    z_b = posterior_mean(o.encode_b);
  } else {
    Rng rng(derive_seed(o.seed, kStreamPrior));
    z_a = rng.normal_vec(static_cast<std::size_t>(ckpt.config.latent_dim));
    z_b = rng.normal_vec(static_cast<std::size_t>(ckpt.config.latent_dim));
  }

  const auto preds = eval::latent_interpolate(ckpt.config, ckpt.params,
                                              image.features, z_a, z_b,
                                              o.steps);
  for (int i = 0; i < o.steps; ++i) {
    const auto field = cvae::prediction_to_field(ckpt.config, preds[i],
                                                 ds.data.spec.horizon);
    const auto path = indexed_path(o.out_prefix, i, ".svg");
    io::render_trajectory_svg(field, path);
    out << "wrote " << path << "\n";
  }
}

struct RenderOpts {
  std::string data;
  std::string split = "test";
  int image_index = 0;
  std::string out;
};

void run_render(const RenderOpts& o, std::ostream& out) {
  const io::DatasetFile ds = io::load_dataset(o.data);
  const auto& image = pick_image(ds, o.split, o.image_index);
  io::render_trajectory_svg(image.truth, o.out);
  out << "wrote " << o.out << "\n";
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"dense trajectory prediction toolkit"};
  app.name("dtp");
  app.require_subcommand(1);

  GenDataOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-data",
                                     "generate a procedural dataset file");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--out", gen.out, "output .dtpd path")->required();
  gen_cmd->add_option("--config", gen.config, "JSON config path");
  gen_cmd->add_option("--n-train", gen.n_train, "training sample count");
  gen_cmd->add_option("--n-test", gen.n_test, "test sample count");
  gen_cmd->add_option("--k", gen.k, "DCT coefficients per axis");

  TrainOpts tr;
  auto* tr_cmd = app.add_subcommand("train", "train a model on a dataset");
  tr_cmd->add_option("--data", tr.data, "dataset path")->required();
  tr_cmd->add_option("--model", tr.model_kind, "cvae or regressor");
  tr_cmd->add_option("--out", tr.out, "output checkpoint path")->required();
  tr_cmd->add_option("--config", tr.config, "JSON config path");
  tr_cmd->add_option("--history", tr.history, "loss history CSV path");
  tr_cmd->add_option("--seed", tr.seed, "training seed");
  tr_cmd->add_option("--epochs", tr.epochs, "override epoch count");

  SampleOpts sm;
  auto* sm_cmd =
      app.add_subcommand("sample", "draw and render model predictions");
  sm_cmd->add_option("--model", sm.model, "checkpoint path")->required();
  sm_cmd->add_option("--data", sm.data, "dataset path")->required();
  sm_cmd->add_option("--split", sm.split, "train or test");
  sm_cmd->add_option("--image-index", sm.image_index, "image index in split");
  sm_cmd->add_option("--n", sm.n, "number of samples");
  sm_cmd->add_option("--seed", sm.seed, "sampling seed");
  sm_cmd->add_option("--out-prefix", sm.out_prefix, "output SVG prefix");

  EvalNllOpts nll;
  auto* nll_cmd = app.add_subcommand(
      "eval-nll", "Parzen-window log-likelihood evaluation");
  nll_cmd->add_option("--data", nll.data, "dataset path")->required();
  nll_cmd->add_option("--cvae", nll.cvae_model, "cvae checkpoint")->required();
  nll_cmd->add_option("--regressor", nll.regressor_model,
                      "regressor checkpoint");
  nll_cmd->add_option("--out", nll.out, "output CSV path")->required();
  nll_cmd->add_option("--bandwidth-fit", nll.bandwidth_fit,
                      "baseline bandwidth fit: val or test");
  nll_cmd->add_option("--seed", nll.seed, "evaluation seed");
  nll_cmd->add_option("--n-samples", nll.n_samples, "samples per image");
  nll_cmd->add_option("--val-images", nll.val_images,
                      "validation images for bandwidth search");
  nll_cmd->add_option("--n-boot", nll.n_boot, "bootstrap resamples");

  EvalMinedOpts med;
  auto* med_cmd = app.add_subcommand(
      "eval-mined", "minimum-Euclidean-distance curves");
  med_cmd->add_option("--data", med.data, "dataset path")->required();
  med_cmd->add_option("--cvae", med.cvae_model, "cvae checkpoint")->required();
  med_cmd->add_option("--regressor", med.regressor_model,
                      "regressor checkpoint");
  med_cmd->add_option("--out", med.out, "output CSV path")->required();
  med_cmd->add_option("--bandwidth-fit", med.bandwidth_fit,
                      "regressor bandwidth fit: val or test");
  med_cmd->add_option("--seed", med.seed, "evaluation seed");
  med_cmd->add_option("--n-max", med.n_max, "maximum samples per image");
  med_cmd->add_option("--val-images", med.val_images,
                      "validation images for bandwidth search");

  ClusterOpts cl;
  auto* cl_cmd =
      app.add_subcommand("cluster", "k-means clustering of model samples");
  cl_cmd->add_option("--model", cl.model, "cvae checkpoint")->required();
  cl_cmd->add_option("--data", cl.data, "dataset path")->required();
  cl_cmd->add_option("--split", cl.split, "train or test");
  cl_cmd->add_option("--image-index", cl.image_index, "image index");
  cl_cmd->add_option("--k", cl.k, "cluster count");
  cl_cmd->add_option("--n", cl.n, "samples to cluster");
  cl_cmd->add_option("--seed", cl.seed, "sampling/clustering seed");
  cl_cmd->add_option("--out", cl.out, "report path")->required();
  cl_cmd->add_option("--render-prefix", cl.render_prefix,
                     "render top clusters to SVG");

  InterpolateOpts ip;
  auto* ip_cmd =
      app.add_subcommand("interpolate", "decode along a latent segment");
  ip_cmd->add_option("--model", ip.model, "cvae checkpoint")->required();
  ip_cmd->add_option("--data", ip.data, "dataset path")->required();
  ip_cmd->add_option("--split", ip.split, "train or test");
  ip_cmd->add_option("--image-index", ip.image_index, "image to decode against");
  ip_cmd->add_option("--steps", ip.steps, "interpolation stops");
  ip_cmd->add_option("--encode-a", ip.encode_a,
                     "posterior mean of this sample as z_a");
  ip_cmd->add_option("--encode-b", ip.encode_b,
                     "posterior mean of this sample as z_b");
  ip_cmd->add_option("--seed", ip.seed, "prior draw seed");
  ip_cmd->add_option("--out-prefix", ip.out_prefix, "output SVG prefix");

  RenderOpts rd;
  auto* rd_cmd =
      app.add_subcommand("render", "render a ground-truth trajectory field");
  rd_cmd->add_option("--data", rd.data, "dataset path")->required();
  rd_cmd->add_option("--split", rd.split, "train or test");
  rd_cmd->add_option("--image-index", rd.image_index, "image index");
  rd_cmd->add_option("--out", rd.out, "output SVG path")->required();

  std::vector<const char*> argv;
  argv.push_back("dtp");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    err << app.help();
    return 1;
  }

  try {
    if (gen_cmd->parsed()) {
      run_gen_data(gen, out);
    } else if (tr_cmd->parsed()) {
      run_train(tr, out);
    } else if (sm_cmd->parsed()) {
      run_sample(sm, out);
    } else if (nll_cmd->parsed()) {
      run_eval_nll(nll, out);
    } else if (med_cmd->parsed()) {
      run_eval_mined(med, out);
    } else if (cl_cmd->parsed()) {
      run_cluster(cl, out);
    } else if (ip_cmd->parsed()) {
      run_interpolate(ip, out);
    } else if (rd_cmd->parsed()) {
      run_render(rd, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace dtp::cli
