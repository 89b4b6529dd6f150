/* Copyright 2026 The cgdbm Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/
#include "cgdbm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cgdbm/analysis.hpp"
#include "cgdbm/error.hpp"
#include "cgdbm/figures.hpp"
#include "cgdbm/images.hpp"
#include "cgdbm/io.hpp"

namespace cgdbm {

namespace fs = std::filesystem;

namespace {

constexpr double kOsiCut = 0.3;

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path))
    throw IoError(std::string("missing ") + what + " " + path.string() + "; run the earlier stage first");
}

Matrix load_data(const fs::path& path, Eigen::Index width) {
  const auto file = load_matrix(path);
  if (file.data.cols() != width)
    throw DimensionError(path.string() + " has " + std::to_string(file.data.cols()) +
                         " columns, the model expects " + std::to_string(width));
  return file.data;
}

std::pair<ModelParams, Offsets> load_checked_model(const RunConfig& cfg, const fs::path& out_dir) {
  const auto path = out_dir / artifact::model;
  require_file(path, "model");
  auto model = load_model(path);
  const auto& p = model.first;
  if (p.visible() != cfg.model.L || p.hidden1() != cfg.model.M || p.hidden2() != cfg.model.N)
    throw DimensionError("model file dimensions " + std::to_string(p.visible()) + "-" +
                         std::to_string(p.hidden1()) + "-" + std::to_string(p.hidden2()) +
                         " differ from the configuration");
  return model;
}

std::string angle_label(double deg) { return format_double(deg); }

// Top-k filters of an activity vector as pixel-space tiles.
Matrix filter_tiles(const Matrix& pixel_filters, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), pixel_filters.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pixel_filters.row(idx[i]);
  return out;
}

void write_figure(const fs::path& stem, const Matrix& tiles, int side, int columns,
                  const std::vector<std::string>& captions) {
  write_pgm(stem.string() + ".pgm", montage(tiles, side, columns));
  write_file(stem.string() + ".svg", svg_montage(tiles, side, columns, captions));
}

std::string correlation_header(const std::vector<double>& orientations) {
  std::string h = "frame";
  for (double o : orientations) h += ",r_" + angle_label(o);
  return h + ",max_abs_r,significant,preference\n";
}

void write_correlation_csv(const fs::path& path, const CorrelationReport& rep,
                           const std::vector<double>& orientations) {
  std::ostringstream out;
  out << correlation_header(orientations);
  for (Eigen::Index f = 0; f < rep.r.rows(); ++f) {
    out << f;
    for (Eigen::Index k = 0; k < rep.r.cols(); ++k) out << ',' << format_double(rep.r(f, k));
    const int pref = rep.preference[static_cast<std::size_t>(f)];
    out << ',' << format_double(rep.r.row(f).cwiseAbs().maxCoeff()) << ',' << (pref >= 0 ? 1 : 0)
        << ',' << (pref >= 0 ? angle_label(orientations[static_cast<std::size_t>(pref)]) : "") << '\n';
  }
  write_file(path, out.str());
}

}  // namespace

PrepareSummary cmd_prepare(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  if (cfg.data.image_dir.empty()) throw ConfigError("data.image_dir is not set");
  if (!fs::is_directory(cfg.data.image_dir))
    throw ConfigError("data.image_dir " + cfg.data.image_dir + " is not a directory");
  const auto images = load_image_dir(cfg.data.image_dir);
  if (images.empty()) throw IoError("no images found in " + cfg.data.image_dir);

  Rng rng(cfg.data.patches.seed);
  const auto split = extract_patches(images, cfg.data.patches, rng);
  const auto w = fit_whitener(split.train, cfg.data.pca_k);

  PrepareSummary s;
  s.images = images.size();
  s.skipped_images = split.skipped_images;
  s.train_rows = split.train.rows();
  s.test_rows = split.test.rows();
  const Matrix centered = split.train.rowwise() - w.mean.transpose();
  const double total_var = centered.array().square().sum() / static_cast<double>(split.train.rows());
  s.retained_variance = total_var > 0.0 ? w.eigvals.sum() / total_var : 0.0;
  s.patch_norm = mean_centered_norm(split.train);

  save_whitener(out_dir / artifact::whitener, w);
  const HeaderFields meta = {{"kind", "whitened_patches"},
                             {"patch_side", std::to_string(cfg.data.patches.patch_side)},
                             {"patch_norm", format_double(s.patch_norm)}};
  save_matrix(out_dir / artifact::train, whiten(split.train, w), meta);
  save_matrix(out_dir / artifact::test, whiten(split.test, w), meta);

  log << "images " << s.images << " (skipped " << s.skipped_images << ")\n"
      << "patches train " << s.train_rows << " x " << split.train.cols() << ", test " << s.test_rows
      << "\n"
      << "whitened to k = " << w.k() << ", retained variance " << s.retained_variance << "\n"
      << "eigenvalue range " << w.eigvals[0] << " .. " << w.eigvals[w.k() - 1] << "\n"
      << "mean centered patch norm " << s.patch_norm << "\n";
  return s;
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  require_file(out_dir / artifact::train, "training data");
  const Matrix train_x = load_data(out_dir / artifact::train, cfg.model.L);
  Matrix valid_x;
  if (fs::exists(out_dir / artifact::test)) valid_x = load_data(out_dir / artifact::test, cfg.model.L);
  const auto checkpoint = out_dir / artifact::checkpoint;

  auto on_epoch = [&](const EpochRecord& rec, const ModelParams& p, const Offsets& c) {
    save_model(checkpoint, p, c);
    log << "epoch " << rec.epoch << " recon " << rec.recon_error << " lr " << rec.learning_rate
        << " momentum " << rec.momentum << " |dW| " << rec.grad_norm_W << " mean sigma "
        << rec.mean_sigma << std::endl;
  };
  auto write_log = [&](const TrainLog& tl) {
    std::ostringstream csv;
    tl.write_csv(csv);
    write_file(out_dir / artifact::train_log, csv.str());
  };

  TrainResult result;
  try {
    result = train(train_x, valid_x, cfg.model.M, cfg.model.N, cfg.training, on_epoch);
  } catch (const TrainingDiverged& e) {
    save_model(checkpoint, e.last_good_params, e.last_good_offsets);
    write_log(e.log);
    log << "training diverged; last finite state kept in " << checkpoint.string() << "\n";
    throw;
  }
  save_model(out_dir / artifact::model, result.params, result.offsets);
  if (result.log.epochs.empty()) save_model(checkpoint, result.params, result.offsets);
  write_log(result.log);
  log << "trained " << result.log.epochs.size() << " epochs"
      << (result.stopped_early ? " (stopped early)" : "") << ", best epoch " << result.best_epoch
      << "\n";
  return result;
}

FrameSet cmd_sample(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const auto [p, c] = load_checked_model(cfg, out_dir);
  require_file(out_dir / artifact::train, "training data");
  const Matrix train_x = load_data(out_dir / artifact::train, cfg.model.L);
  const Vector p_init = average_initial_probability(p, c, train_x, cfg.training);
  save_matrix(out_dir / artifact::p_init, p_init.transpose(), {{"kind", "p_init"}});

  auto frames = run_spontaneous_session(p, c, p_init, cfg.sampling);
  frames.source = "session chains=" + std::to_string(cfg.sampling.n_chains) +
                  " iterations=" + std::to_string(cfg.sampling.n_iterations) +
                  " every=" + std::to_string(cfg.sampling.record_every);
  save_frames(out_dir / artifact::frames, frames);
  log << "recorded " << frames.count() << " frames of width " << frames.width()
      << ", mean activity " << frames.frames.mean() << " (p_init mean " << p_init.mean() << ")\n";
  return frames;
}

AnalysisSummary cmd_analyze(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log,
                            const fs::path& frames_path) {
  cfg.validate();
  const auto [p, c] = load_checked_model(cfg, out_dir);
  require_file(out_dir / artifact::whitener, "whitener");
  const auto w = load_whitener(out_dir / artifact::whitener);
  if (w.k() != cfg.model.L) throw DimensionError("whitener dimension differs from model.L");
  const int side = cfg.data.patches.patch_side;
  if (w.input_dim() != static_cast<Eigen::Index>(side) * side)
    throw DimensionError("whitener input size differs from data.patch_side^2");

  const fs::path fpath = frames_path.empty() ? out_dir / artifact::frames : frames_path;
  require_file(fpath, "frames");
  const FrameSet frames = load_frames(fpath);
  if (frames.width() != cfg.model.M)
    throw DimensionError("frames have width " + std::to_string(frames.width()) + ", the model has M = " +
                         std::to_string(cfg.model.M));
  Vector p_init;
  if (fs::exists(out_dir / artifact::p_init)) {
    p_init = load_matrix(out_dir / artifact::p_init).data.row(0).transpose();
  } else {
    require_file(out_dir / artifact::train, "training data");
    p_init = average_initial_probability(p, c, load_data(out_dir / artifact::train, cfg.model.L),
                                         cfg.training);
  }
  if (p_init.size() != cfg.model.M) throw DimensionError("p_init width differs from model.M");

  // Gratings matched in mean norm to the natural patches.
  const auto& a = cfg.analysis;
  const auto freqs = cfg.grating_frequencies();
  double patch_norm = 0.0;
  {
    require_file(out_dir / artifact::train, "training data");
    const auto meta = load_matrix(out_dir / artifact::train).get("patch_norm");
    if (meta.empty()) throw FormatError("training data lacks the patch_norm field");
    patch_norm = std::stod(meta);
  }
  const double amplitude = amplitude_for_norm(patch_norm, side, a.orientations, freqs, a.phases);
  const auto groups = group_by_orientation(generate_gratings(side, a.orientations, freqs, a.phases, amplitude));
  const auto maps = orientation_maps(p, c, groups, w, cfg.training);

  AnalysisSummary s;
  s.frames = frames.count();
  s.threshold = significance_threshold(a.threshold_n, a.alpha);
  s.threshold_at_M = cfg.model.M >= 4 ? significance_threshold(cfg.model.M, a.alpha) : NAN;

  const auto rep = correlate(frames, maps, s.threshold, cfg.workers);
  Rng control_rng(stream_seed(cfg.seed, 14));
  const auto control = random_control_frames(p_init, static_cast<std::size_t>(frames.count()), control_rng);
  const auto control_rep = correlate(control, maps, s.threshold, cfg.workers);
  s.significant_fraction = rep.significant_fraction;
  s.control_significant_fraction = control_rep.significant_fraction;
  s.max_r = rep.max_r;
  s.control_max_r = control_rep.max_r;

  const Vector osi = orientation_selectivity(maps);
  s.mean_osi = osi.mean();
  s.osi_fraction = (osi.array() >= kOsiCut).cast<double>().mean();

  const auto som = train_som(frames, a.som);
  const auto matches = correlate_som(som, maps);
  for (const auto& m : matches) {
    s.som_max_r = std::max(s.som_max_r, m.r);
    s.som_nodes_significant += m.r >= s.threshold;
  }

  // Orientation maps.
  {
    std::ostringstream out;
    out << "orientation";
    for (Eigen::Index j = 0; j < maps.maps.cols(); ++j) out << ",unit_" << j;
    out << '\n';
    for (Eigen::Index k = 0; k < maps.count(); ++k) {
      out << angle_label(maps.orientations[static_cast<std::size_t>(k)]);
      for (Eigen::Index j = 0; j < maps.maps.cols(); ++j) out << ',' << format_double(maps.maps(k, j));
      out << '\n';
    }
    write_file(out_dir / "maps.csv", out.str());
    FrameSet as_frames{maps.maps, FrameKind::orientation_map, cfg.seed, "orientation maps"};
    save_frames(out_dir / "maps.cgmat", as_frames);
  }
  write_correlation_csv(out_dir / "correlation.csv", rep, maps.orientations);
  write_correlation_csv(out_dir / "control_correlation.csv", control_rep, maps.orientations);
  {
    std::ostringstream out;
    out << "orientation,count,relative,max_r,control_count\n";
    for (Eigen::Index k = 0; k < maps.count(); ++k)
      out << angle_label(maps.orientations[static_cast<std::size_t>(k)]) << ','
          << format_double(rep.preference_counts[k]) << ',' << format_double(rep.preference_hist[k]) << ','
          << format_double(rep.max_r_per_orientation[k]) << ','
          << format_double(control_rep.preference_counts[k]) << '\n';
    write_file(out_dir / "histogram.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "node,orientation,r,significant\n";
    for (std::size_t n = 0; n < matches.size(); ++n)
      out << n << ','
          << (matches[n].orientation >= 0
                  ? angle_label(maps.orientations[static_cast<std::size_t>(matches[n].orientation)])
                  : "")
          << ',' << format_double(matches[n].r) << ',' << (matches[n].r >= s.threshold ? 1 : 0) << '\n';
    write_file(out_dir / "som.csv", out.str());
    std::ostringstream nodes;
    nodes << "node";
    for (Eigen::Index j = 0; j < som.nodes.cols(); ++j) nodes << ",unit_" << j;
    nodes << '\n';
    for (Eigen::Index n = 0; n < som.size(); ++n) {
      nodes << n;
      for (Eigen::Index j = 0; j < som.nodes.cols(); ++j) nodes << ',' << format_double(som.nodes(n, j));
      nodes << '\n';
    }
    write_file(out_dir / "som_nodes.csv", nodes.str());
    std::ostringstream qe;
    qe << "epoch,quantization_error\n";
    for (std::size_t e = 0; e < som.quantization_error.size(); ++e)
      qe << e << ',' << format_double(som.quantization_error[e]) << '\n';
    write_file(out_dir / "som_training.csv", qe.str());
  }
  {
    std::ostringstream out;
    out << "unit,osi,preferred_orientation\n";
    for (Eigen::Index j = 0; j < osi.size(); ++j) {
      Eigen::Index best;
      maps.maps.col(j).maxCoeff(&best);
      out << j << ',' << format_double(osi[j]) << ','
          << angle_label(maps.orientations[static_cast<std::size_t>(best)]) << '\n';
    }
    write_file(out_dir / "osi.csv", out.str());
  }

  // Filter figures.
  const Matrix pixel_filters = dewhiten_directions(p.W.transpose(), w);
  {
    std::vector<std::string> captions;
    for (Eigen::Index j = 0; j < p.hidden1(); ++j) captions.push_back(std::to_string(j));
    const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.hidden1())))));
    write_figure(out_dir / "filters_layer1", pixel_filters, side, cols, captions);
  }
  {
    const int top = std::min<int>(a.rf_top, static_cast<int>(p.hidden1()));
    Matrix tiles = Matrix::Constant(p.hidden2() * (top + 1), pixel_filters.cols(), NAN);
    std::vector<std::string> captions;
    for (Eigen::Index k = 0; k < p.hidden2(); ++k) {
      const auto rf = second_layer_rf(p, w, k, static_cast<std::size_t>(top));
      tiles.row(k * (top + 1)) = rf.image.transpose();
      captions.push_back("z" + std::to_string(k));
      for (std::size_t i = 0; i < rf.filters.size(); ++i) {
        tiles.row(k * (top + 1) + 1 + static_cast<Eigen::Index>(i)) = pixel_filters.row(rf.filters[i]);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%+.2f", rf.weights[i]);
        captions.push_back(buf);
      }
      for (std::size_t i = rf.filters.size(); i < static_cast<std::size_t>(top); ++i) captions.emplace_back();
    }
    write_figure(out_dir / "filters_layer2", tiles, side, top + 1, captions);
  }
  {
    // Per orientation: the map's most active filters, then those of the
    // best-correlated significant frame preferring it.
    const int top = std::min<int>(a.top_filters, static_cast<int>(p.hidden1()));
    Matrix tiles = Matrix::Constant(maps.count() * 2 * top, pixel_filters.cols(), NAN);
    std::vector<std::string> captions(static_cast<std::size_t>(tiles.rows()));
    for (Eigen::Index k = 0; k < maps.count(); ++k) {
      const auto map_idx = top_active_filters(maps.maps.row(k).transpose(), static_cast<std::size_t>(top));
      tiles.middleRows(2 * k * top, top) = filter_tiles(pixel_filters, map_idx);
      captions[static_cast<std::size_t>(2 * k * top)] = "map " + angle_label(maps.orientations[static_cast<std::size_t>(k)]);
      Eigen::Index best = -1;
      for (Eigen::Index f = 0; f < rep.r.rows(); ++f)
        if (rep.preference[static_cast<std::size_t>(f)] == k && (best < 0 || rep.r(f, k) > rep.r(best, k))) best = f;
      if (best >= 0) {
        const auto fr_idx = top_active_filters(frames.frames.row(best).transpose(), static_cast<std::size_t>(top));
        tiles.middleRows((2 * k + 1) * top, top) = filter_tiles(pixel_filters, fr_idx);
        char buf[48];
        std::snprintf(buf, sizeof buf, "frame %ld r=%.2f", static_cast<long>(best), rep.r(best, k));
        captions[static_cast<std::size_t>((2 * k + 1) * top)] = buf;
      }
    }
    write_figure(out_dir / "maps_vs_frames", tiles, side, top, captions);
  }

  {
    std::ostringstream out;
    out << "frames=" << s.frames << "\n"
        << "threshold=" << format_double(s.threshold) << "\n"
        << "threshold_n=" << a.threshold_n << "\n"
        << "threshold_at_M=" << format_double(s.threshold_at_M) << "\n"
        << "significant_fraction=" << format_double(s.significant_fraction) << "\n"
        << "control_significant_fraction=" << format_double(s.control_significant_fraction) << "\n"
        << "max_r=" << format_double(s.max_r) << "\n"
        << "control_max_r=" << format_double(s.control_max_r) << "\n"
        << "mean_osi=" << format_double(s.mean_osi) << "\n"
        << "osi_fraction_ge_0.3=" << format_double(s.osi_fraction) << "\n"
        << "som_nodes_significant=" << s.som_nodes_significant << "\n"
        << "som_max_r=" << format_double(s.som_max_r) << "\n"
        << "grating_amplitude=" << format_double(amplitude) << "\n";
    write_file(out_dir / artifact::summary, out.str());
  }
  log << "threshold " << s.threshold << " (n = " << a.threshold_n << "), " << s.threshold_at_M
      << " at n = M\n"
      << "significant frames " << 100 * s.significant_fraction << "% vs control "
      << 100 * s.control_significant_fraction << "%\n"
      << "max r " << s.max_r << " (control " << s.control_max_r << ")\n"
      << "OSI >= 0.3 for " << 100 * s.osi_fraction << "% of units, mean OSI " << s.mean_osi << "\n"
      << "SOM nodes above threshold " << s.som_nodes_significant << " of " << som.size()
      << ", best r " << s.som_max_r << "\n";
  return s;
}

std::string cmd_report(const fs::path& out_dir) {
  std::ostringstream out;
  const auto log_path = out_dir / artifact::train_log;
  if (fs::exists(log_path)) {
    std::istringstream in(read_file(log_path));
    std::string line, last;
    int rows = -1;
    while (std::getline(in, line))
      if (!line.empty()) {
        last = line;
        ++rows;
      }
    out << "training: " << rows << " epochs logged; last row\n  " << last << "\n";
  } else {
    out << "training: no log\n";
  }
  if (fs::exists(out_dir / artifact::frames)) {
    const auto frames = load_frames(out_dir / artifact::frames);
    out << "frames: " << frames.count() << " x " << frames.width() << " (" << to_string(frames.kind)
        << ", " << frames.source << ")\n";
  }
  const auto summary_path = out_dir / artifact::summary;
  if (fs::exists(summary_path)) {
    out << "\nanalysis\n";
    std::istringstream in(read_file(summary_path));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      out << "  " << line.substr(0, eq) << std::string(32 - std::min<std::size_t>(eq, 31), ' ')
          << line.substr(eq + 1) << "\n";
    }
  } else {
    out << "analysis: not run\n";
  }
  if (fs::exists(out_dir / "histogram.csv")) out << "\npreference histogram\n" << read_file(out_dir / "histogram.csv");
  write_file(out_dir / artifact::report, out.str());
  return out.str();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e))
    return 4;
  return 1;
}

}  // namespace cgdbm
