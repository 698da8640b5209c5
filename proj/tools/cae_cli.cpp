// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// cae: train, encode, decode, eval, rd-curve, bd-rate.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cae/cae.hpp"

namespace fs = std::filesystem;

namespace {

using Model = cae::CaeParams<double>;

Model load_model(const fs::path& path) {
  return cae::load_checkpoint<double>(path).params;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n') c = ';';
  return s;
}

std::string bpp_tag(double bpp) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", bpp);
  return buf;
}

struct Quality {
  double psnr_y, psnr_cb, psnr_cr, psnr_weighted, msssim_y;
};

Quality measure(const cae::RgbImage& ref, const cae::RgbImage& test) {
  const auto x = cae::rgb_to_ycbcr(ref), y = cae::rgb_to_ycbcr(test);
  Quality q{cae::psnr(x[0], y[0]), cae::psnr(x[1], y[1]), cae::psnr(x[2], y[2]), 0.0, NAN};
  q.psnr_weighted = cae::weighted_psnr(q.psnr_y, q.psnr_cb, q.psnr_cr);
  if (x[0].rows >= cae::kMsSsimMinExtent && x[0].cols >= cae::kMsSsimMinExtent) {
    q.msssim_y = cae::ms_ssim(x[0], y[0]);
  }
  return q;
}

void write_or_print(const std::optional<fs::path>& out, const std::string& text) {
  if (out) {
    cae::write_text_atomic(*out, text);
  } else {
    std::cout << text;
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  fs::path dataset, config, out;
  std::optional<fs::path> resume, loss_csv;
};

template <typename T>
void run_train(const TrainArgs& a, const cae::RunConfig& cfg) {
  cae::TrainerState<T> state;
  if (a.resume) {
    state = cae::load_checkpoint<T>(*a.resume, cfg.train.learning_rate);
    if (!(state.params.architecture == cfg.architecture)) {
      throw cae::Error(cae::ErrorKind::kInvalidArgument,
                       "checkpoint architecture differs from the config");
    }
  } else {
    state = cae::TrainerState<T>::fresh(
        cae::CaeParams<T>::initialize(cfg.architecture, cfg.init_seed), cfg.train.learning_rate);
  }
  const auto ds = cae::ingest_dataset<T>(a.dataset, cfg.architecture.patch_size,
                                         cfg.dataset_patches, cfg.train.seed);
  for (const auto& r : ds.rejects) {
    std::cerr << "cae: skipped " << r.path.string() << ": " << r.reason << "\n";
  }
  std::cerr << "cae: " << ds.patches.size() << " patches from " << ds.sources.size()
            << " images, " << state.params.parameter_count() << " parameters, starting at "
            << "iteration " << state.iteration << "\n";
  const auto result = cae::train(ds.patches, cfg.train, std::move(state), a.out);
  if (a.loss_csv) cae::write_text_atomic(*a.loss_csv, cae::loss_history_csv(result.history));
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cerr << "cae: iteration " << last.iteration << " J=" << last.terms.total
              << " mse=" << last.terms.distortion << " rate=" << last.terms.rate << "\n";
  }
  std::cout << a.out.string() << "\n";
}

// ---------------------------------------------------------------- encode

fs::path ladder_path(const fs::path& out, double bpp, bool ladder) {
  if (!ladder) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + "_" + bpp_tag(bpp) + out.extension().string());
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional autoencoder image codec"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CAE_THREADS or all cores)");

  // train
  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model on a directory of PPM/PGM images");
  train->add_option("--dataset", train_args.dataset, "Image directory")->required();
  train->add_option("--config", train_args.config, "key=value config file")->required();
  train->add_option("--out", train_args.out, "Checkpoint to write")->required();
  train->add_option("--resume", train_args.resume, "Checkpoint to continue from");
  train->add_option("--loss-csv", train_args.loss_csv, "Write per-iteration losses here");

  // encode
  fs::path enc_in, enc_model, enc_out;
  std::vector<double> enc_bpp;
  auto* encode = app.add_subcommand("encode", "Compress an image");
  encode->add_option("--input", enc_in, "PPM/PGM image")->required()->check(CLI::ExistingFile);
  encode->add_option("--model", enc_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  encode->add_option("--out", enc_out, "Output .caec file")->required();
  encode->add_option("--bpp", enc_bpp,
                     "Target bits per pixel; several values write one file per rate "
                     "(omit for full precision)")
      ->delimiter(',');

  // decode
  fs::path dec_in, dec_model, dec_out;
  bool dec_gray = false;
  auto* decode = app.add_subcommand("decode", "Decompress a .caec file");
  decode->add_option("--input", dec_in, ".caec file")->required()->check(CLI::ExistingFile);
  decode->add_option("--model", dec_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", dec_out, "Output PPM (PGM with --gray)")->required();
  decode->add_flag("--gray", dec_gray, "Write the luma plane as PGM");

  // eval
  std::vector<fs::path> eval_files;
  std::optional<fs::path> eval_out;
  auto* eval = app.add_subcommand("eval", "PSNR and MS-SSIM of image pairs");
  eval->add_option("pairs", eval_files, "reference test [reference test ...]")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "CSV output (default stdout)");

  // rd-curve
  fs::path rd_in, rd_model;
  std::optional<fs::path> rd_out;
  std::vector<double> rd_ladder{0.12, 0.5, 1.0, 2.4};
  std::string rd_label;
  auto* rd = app.add_subcommand("rd-curve", "Encode at several rates and measure quality");
  rd->add_option("--input", rd_in, "PPM/PGM image")->required()->check(CLI::ExistingFile);
  rd->add_option("--model", rd_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  rd->add_option("--ladder", rd_ladder, "Target bpp values")->delimiter(',')->capture_default_str();
  rd->add_option("--label", rd_label, "Curve label (default: image file stem)");
  rd->add_option("--out", rd_out, "CSV output (default stdout)");

  // bd-rate
  fs::path bd_anchor, bd_test;
  std::optional<fs::path> bd_report;
  auto* bd = app.add_subcommand("bd-rate", "Bjontegaard rate difference of two RD curves");
  bd->add_option("anchor", bd_anchor, "Anchor RD CSV")->required()->check(CLI::ExistingFile);
  bd->add_option("test", bd_test, "Test RD CSV")->required()->check(CLI::ExistingFile);
  bd->add_option("--report", bd_report, "Per-label CSV (image,bd_rate_percent)");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) setenv("CAE_THREADS", std::to_string(threads).c_str(), 1);

  try {
    if (*train) {
      const auto text = cae::read_file(train_args.config);
      const auto cfg = cae::parse_config(std::string(text.begin(), text.end()));
      if (cfg.precision == "double") {
        run_train<double>(train_args, cfg);
      } else {
        run_train<float>(train_args, cfg);
      }
    } else if (*encode) {
      const auto image = cae::read_pnm(enc_in).rgb;
      const Model model = load_model(enc_model);
      const bool ladder = enc_bpp.size() > 1;
      std::vector<std::optional<double>> rates;
      for (double b : enc_bpp) rates.emplace_back(b);
      if (rates.empty()) rates.emplace_back();
      for (const auto& rate : rates) {
        const auto target = rate ? cae::ImageRate::bpp(*rate, image.width(), image.height())
                                 : cae::ImageRate::lossless();
        const auto enc = cae::encode_image(image, model, target);
        const fs::path out = ladder_path(enc_out, rate.value_or(0.0), ladder);
        cae::write_file_atomic(out, enc.bytes);
        std::printf("%s %zu bytes %.6f bpp\n", out.string().c_str(), enc.bytes.size(),
                    enc.bpp());
      }
    } else if (*decode) {
      const Model model = load_model(dec_model);
      const auto dec = cae::decode_image(cae::read_file(dec_in), model);
      if (dec.model_mismatch) {
        std::cerr << "cae: warning: " << dec_in.string()
                  << " was encoded with a different model\n";
      }
      if (dec_gray) {
        cae::RgbImage luma = dec.rgb;
        luma[0] = cae::rgb_to_ycbcr(dec.rgb)[0];
        cae::write_pnm(dec_out, luma, true);
      } else {
        cae::write_pnm(dec_out, dec.rgb);
      }
    } else if (*eval) {
      if (eval_files.size() % 2 != 0) {
        throw cae::Error(cae::ErrorKind::kInvalidArgument,
                         "eval takes reference/test pairs; got an odd number of files");
      }
      std::string csv =
          "reference,test,psnr_y_db,psnr_cb_db,psnr_cr_db,psnr_weighted_db,msssim_y\n";
      for (std::size_t i = 0; i < eval_files.size(); i += 2) {
        const auto q = measure(cae::read_pnm(eval_files[i]).rgb,
                               cae::read_pnm(eval_files[i + 1]).rgb);
        csv += eval_files[i].string() + "," + eval_files[i + 1].string() + "," +
               cae::format_double(q.psnr_y) + "," + cae::format_double(q.psnr_cb) + "," +
               cae::format_double(q.psnr_cr) + "," + cae::format_double(q.psnr_weighted) +
               "," + cae::format_double(q.msssim_y) + "\n";
      }
      write_or_print(eval_out, csv);
    } else if (*rd) {
      const auto image = cae::read_pnm(rd_in).rgb;
      const Model model = load_model(rd_model);
      cae::RdCurve curve{rd_label.empty() ? rd_in.stem().string() : rd_label, {}};
      std::sort(rd_ladder.begin(), rd_ladder.end());
      for (double bpp : rd_ladder) {
        const auto enc = cae::encode_image(
            image, model, cae::ImageRate::bpp(bpp, image.width(), image.height()));
        const auto q = measure(image, cae::decode_image(enc.bytes, model).rgb);
        curve.points.push_back({enc.bpp(), q.psnr_weighted, q.msssim_y, q.psnr_y});
      }
      write_or_print(rd_out, cae::rd_csv({curve}));
    } else if (*bd) {
      auto load = [](const fs::path& p) {
        const auto b = cae::read_file(p);
        return cae::parse_rd_csv(std::string(b.begin(), b.end()));
      };
      const auto anchors = load(bd_anchor), tests = load(bd_test);
      std::vector<cae::BdRateRow> rows;
      if (anchors.size() == 1 && tests.size() == 1) {
        rows.push_back({tests[0].label, cae::bd_rate(anchors[0], tests[0])});
      } else {
        for (const auto& t : tests) {
          const auto a = std::find_if(anchors.begin(), anchors.end(),
                                      [&](const cae::RdCurve& c) { return c.label == t.label; });
          if (a == anchors.end()) {
            throw cae::Error(cae::ErrorKind::kInvalidArgument,
                             "no anchor curve labelled '" + t.label + "'");
          }
          rows.push_back({t.label, cae::bd_rate(*a, t)});
        }
      }
      for (auto& r : rows) {
        if (std::abs(r.bd_rate_percent) < 5e-5) r.bd_rate_percent = 0.0;
      }
      if (rows.size() == 1) {
        std::printf("%.4f\n", rows[0].bd_rate_percent);
      } else {
        double sum = 0.0;
        for (const auto& r : rows) {
          std::printf("%s %.4f\n", r.image.c_str(), r.bd_rate_percent);
          sum += r.bd_rate_percent;
        }
        std::printf("average %.4f\n", sum / static_cast<double>(rows.size()));
      }
      if (bd_report) cae::write_text_atomic(*bd_report, cae::bd_rate_csv(rows));
    }
  } catch (const std::exception& e) {
    std::cerr << "cae: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
