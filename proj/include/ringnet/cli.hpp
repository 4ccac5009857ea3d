#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ringnet/checkpoint.hpp"
#include "ringnet/config.hpp"
#include "ringnet/dataset_io.hpp"
#include "ringnet/evaluation.hpp"
#include "ringnet/experiments.hpp"
#include "ringnet/mesh_io.hpp"
#include "ringnet/model_generator.hpp"
#include "ringnet/model_io.hpp"
#include "ringnet/report.hpp"
#include "ringnet/trainer.hpp"

namespace ringnet {

inline Json params_to_json(const ParamVector& p) {
  return {{"frame", "pixel"},
          {"cam", p.cam},
          {"global_rotation", p.global_rot},
          {"jaw_rotation", p.jaw_rot},
          {"shape", p.shape},
          {"expression", p.expression}};
}

inline ParamVector params_from_json(const Json& j) {
  try {
    ParamVector p;
    p.cam = j.at("cam").get<std::array<double, 3>>();
    p.global_rot = j.at("global_rotation").get<std::array<double, 3>>();
    p.jaw_rot = j.at("jaw_rotation").get<std::array<double, 3>>();
    p.shape = j.at("shape").get<std::vector<double>>();
    p.expression = j.at("expression").get<std::vector<double>>();
    return p;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("parameter file: ") + e.what());
  }
}

/// Row of the evaluation manifest; paths are relative to the manifest.
struct EvalEntry {
  std::string image_id, challenge;
  std::filesystem::path prediction_mesh, prediction_landmarks, scan_mesh, scan_landmarks;
};

inline std::vector<EvalEntry> read_eval_manifest(const std::filesystem::path& p) {
  const std::string text = read_text(p);
  const std::filesystem::path base = p.parent_path();
  std::istringstream in(text);
  std::string line;
  std::vector<EvalEntry> out;
  auto resolve = [&](const std::string& s) { return s.empty() ? std::filesystem::path() : base / s; };
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (n == 1) {
      if (line != "image_id,challenge,prediction_mesh,prediction_landmarks,scan_mesh,scan_landmarks")
        throw FormatError(p.string() + ":1: expected header image_id,challenge,prediction_mesh,prediction_landmarks,scan_mesh,scan_landmarks");
      continue;
    }
    if (f.size() != 6) throw FormatError(p.string() + ":" + std::to_string(n) + ": expected 6 fields");
    out.push_back({f[0], f[1], resolve(f[2]), resolve(f[3]), resolve(f[4]), resolve(f[5])});
  }
  return out;
}

namespace detail {

inline std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    std::size_t v = 0;
    if (!parse_number(trim(tok), v)) throw ValueError("invalid list entry '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValueError("empty list");
  return out;
}

inline std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

inline void write_prediction(const HeadModel& m, const ParamVector& p, bool neutral, const std::string& params_out,
                             const std::string& mesh_out, const std::string& landmarks_out) {
  const DenseArray v = neutral ? neutral_vertices(m, p.shape) : decode_vertices(m, p);
  if (!params_out.empty()) write_text(params_out, params_to_json(p).dump(2) + "\n");
  if (!mesh_out.empty()) write_mesh(make_mesh(v, m.faces), mesh_out);
  if (!landmarks_out.empty()) write_points(eval_landmarks(m, v), landmarks_out);
}

}  // namespace detail

/// Command-line entry point; `args` excludes the program name.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Landmark-supervised head shape regression toolkit", "ringnet"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  app.add_option("--seed", seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "Write a procedural head model asset");
  std::string gen_out;
  ModelGeneratorConfig gen_cfg;
  gen->add_option("-o,--out", gen_out, "Model manifest path (.json)")->required();
  gen->add_option("--shape", gen_cfg.num_shape, "Shape components")->capture_default_str();
  gen->add_option("--expression", gen_cfg.num_expression, "Expression components")->capture_default_str();
  gen->add_option("--rings", gen_cfg.latitude_rings, "Latitude rings of the mesh")->capture_default_str();
  gen->add_option("--segments", gen_cfg.longitude_segments, "Longitude segments (even)")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Sample a synthetic landmark dataset");
  std::string synth_model, synth_out, synth_config, synth_export;
  std::optional<std::size_t> synth_identities, synth_images;
  synth->add_option("--model", synth_model, "Model manifest")->required();
  synth->add_option("-o,--out", synth_out, "Dataset manifest path (.json)")->required();
  synth->add_option("--config", synth_config, "key = value configuration file");
  synth->add_option("--identities", synth_identities, "Number of identities");
  synth->add_option("--images", synth_images, "Images per identity");
  synth->add_option("--export", synth_export, "Also write text landmarks, ground-truth meshes and a manifest here");

  // train
  auto* trn = app.add_subcommand("train", "Train the encoder with ring batches");
  std::string trn_model, trn_data, trn_out, trn_config, trn_csv, trn_resume;
  std::optional<std::size_t> trn_epochs, trn_steps;
  std::size_t trn_every = 0;
  trn->add_option("--model", trn_model, "Model manifest")->required();
  trn->add_option("--data", trn_data, "Dataset manifest")->required();
  trn->add_option("-o,--out", trn_out, "Checkpoint manifest path (.json)")->required();
  trn->add_option("--config", trn_config, "key = value configuration file");
  trn->add_option("--epochs", trn_epochs, "Epochs");
  trn->add_option("--steps", trn_steps, "Total steps (overrides epochs)");
  trn->add_option("--loss-csv", trn_csv, "Per-step loss log");
  trn->add_option("--resume", trn_resume, "Continue from this checkpoint");
  trn->add_option("--checkpoint-every", trn_every, "Also write <out>_step<k> every k steps");

  // infer
  auto* inf = app.add_subcommand("infer", "Regress parameters from a landmark file");
  std::string inf_model, inf_ckpt, inf_lm, inf_params, inf_mesh, inf_lm3;
  bool inf_neutral = false;
  inf->add_option("--model", inf_model, "Model manifest")->required();
  inf->add_option("--checkpoint", inf_ckpt, "Checkpoint manifest")->required();
  inf->add_option("--landmarks", inf_lm, "Landmark file, one 'x y confidence' line each")->required();
  inf->add_option("--params", inf_params, "Output parameter JSON");
  inf->add_option("--mesh", inf_mesh, "Output mesh (.obj or .ply)");
  inf->add_option("--mesh-landmarks", inf_lm3, "Output 7 evaluation landmarks of the mesh");
  inf->add_flag("--neutral", inf_neutral, "Write the neutral mesh (zero pose and expression)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit parameters to a landmark file by direct optimization");
  std::string fit_model, fit_lm, fit_params, fit_mesh, fit_lm3;
  bool fit_neutral = false;
  FitConfig fit_cfg;
  fit->add_option("--model", fit_model, "Model manifest")->required();
  fit->add_option("--landmarks", fit_lm, "Landmark file")->required();
  fit->add_option("--params", fit_params, "Output parameter JSON");
  fit->add_option("--mesh", fit_mesh, "Output mesh (.obj or .ply)");
  fit->add_option("--mesh-landmarks", fit_lm3, "Output 7 evaluation landmarks of the mesh");
  fit->add_option("--iterations", fit_cfg.iterations, "Optimizer iterations")->capture_default_str();
  fit->add_flag("--neutral", fit_neutral, "Write the neutral mesh");

  // eval
  auto* ev = app.add_subcommand("eval", "Scan-to-mesh evaluation of predictions");
  std::string ev_manifest, ev_out;
  bool ev_no_crop = false;
  EvalOptions ev_opt;
  ev->add_option("--manifest", ev_manifest,
                 "CSV: image_id,challenge,prediction_mesh,prediction_landmarks,scan_mesh,scan_landmarks")
      ->required();
  ev->add_option("-o,--out-dir", ev_out, "Directory for report.json, curve.csv and curve.svg")->required();
  ev->add_flag("--no-crop", ev_no_crop, "Use the whole scan");
  ev->add_option("--icp-iters", ev_opt.icp.max_iters, "ICP iteration limit")->capture_default_str();

  // ablate
  auto* abl = app.add_subcommand("ablate", "Train and evaluate one model per ring size");
  std::string abl_model, abl_data, abl_validation, abl_config, abl_out, abl_rings = "3,4,5,6";
  std::size_t abl_holdout = 4;
  std::optional<std::size_t> abl_steps;
  abl->add_option("--model", abl_model, "Model manifest")->required();
  abl->add_option("--data", abl_data, "Dataset manifest")->required();
  abl->add_option("--config", abl_config, "key = value configuration file");
  abl->add_option("--rings", abl_rings, "Comma-separated ring sizes")->capture_default_str();
  abl->add_option("--holdout", abl_holdout, "Images per identity held out for validation")->capture_default_str();
  abl->add_option("--validation", abl_validation, "Separate validation dataset (the whole --data set is then trained on)");
  abl->add_option("--steps", abl_steps, "Steps per ring size");
  abl->add_option("-o,--out", abl_out, "Output CSV table")->required();

  // plot
  auto* plt = app.add_subcommand("plot", "Render cumulative-curve CSV files to SVG");
  std::vector<std::string> plt_curves;
  std::string plt_out, plt_title = "Cumulative error";
  plt->add_option("--curve", plt_curves, "Curve CSV (threshold,fraction); repeatable")->required();
  plt->add_option("-o,--out", plt_out, "Output SVG")->required();
  plt->add_option("--title", plt_title, "Plot title")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const bool seed_given = app.count("--seed") > 0;
  try {
    if (*gen) {
      if (seed_given) gen_cfg.seed = seed;
      const HeadModel m = generate_head_model(gen_cfg);
      save_model(m, gen_out);
      out << "model: " << m.num_vertices() << " vertices, " << m.faces.size() << " faces, " << m.num_joints() << " joints, "
          << m.num_shape() << " shape, " << m.num_expression() << " expression\n";
    } else if (*synth) {
      const HeadModel m = load_model(synth_model);
      SynthConfig cfg;
      if (!synth_config.empty()) apply_config_file(cfg, synth_config);
      if (synth_identities) cfg.identities = *synth_identities;
      if (synth_images) cfg.images_per_identity = *synth_images;
      if (seed_given) cfg.seed = seed;
      const Dataset d = make_dataset(m, cfg);
      save_dataset(d, cfg, synth_out);
      if (!synth_export.empty()) {
        const std::filesystem::path dir = synth_export;
        std::filesystem::create_directories(dir);
        std::string manifest = "image_id,identity,landmarks,neutral_mesh,neutral_landmarks\n";
        std::vector<bool> written(d.num_identities, false);
        for (std::size_t i = 0; i < d.observations.size(); ++i) {
          const Observation& o = d.observations[i];
          const std::string id = "img" + std::to_string(i), who = "id" + std::to_string(o.identity);
          write_landmarks_2d(o.landmarks, dir / (id + ".txt"));
          if (!written[o.identity]) {
            const Prediction p = neutral_prediction(m, o.truth.shape);
            write_obj(p.mesh, dir / (who + ".obj"));
            write_points(p.landmarks, dir / (who + "_landmarks.txt"));
            written[o.identity] = true;
          }
          manifest += id + "," + std::to_string(o.identity) + "," + id + ".txt," + who + ".obj," + who + "_landmarks.txt\n";
        }
        write_text(dir / "manifest.csv", manifest);
      }
      out << "dataset: " << d.observations.size() << " observations of " << d.num_identities << " identities\n";
    } else if (*trn) {
      const HeadModel m = load_model(trn_model);
      const StoredDataset data = load_dataset(trn_data);
      TrainState state;
      if (!trn_resume.empty()) {
        state = load_checkpoint(trn_resume);
      } else {
        TrainConfig cfg;
        if (!trn_config.empty()) apply_config_file(cfg, trn_config);
        if (seed_given) cfg.seed = seed;
        if (app.count("--threads")) cfg.threads = threads;
        state = init_training(m, data.data, cfg);
      }
      if (trn_epochs && !trn_steps) state.config.epochs = *trn_epochs, state.config.steps = 0;
      if (trn_steps) state.config.steps = *trn_steps;
      if (app.count("--threads")) state.config.threads = threads;
      const std::size_t until = state.config.total_steps(data.data.observations.size());
      const std::uint64_t first = state.step + 1;
      std::ofstream csv;
      if (!trn_csv.empty()) {
        csv.open(trn_csv, std::ios::binary);
        if (!csv) throw FormatError("cannot write " + trn_csv);
        csv << loss_csv_header();
      }
      const auto history = resume_training(m, data.data, state, until, [&](const TrainState& s, const LossBreakdown& l) {
        if (csv.is_open()) csv << loss_csv_row(s.step, l);
        if (trn_every && s.step % trn_every == 0) save_checkpoint(s, detail::sibling(trn_out, "_step" + std::to_string(s.step)));
      });
      save_checkpoint(state, trn_out);
      out << "trained steps " << first << ".." << state.step;
      if (!history.empty()) out << ", final loss " << history.back().total;
      out << "\n";
    } else if (*inf) {
      const HeadModel m = load_model(inf_model);
      const TrainState s = load_checkpoint(inf_ckpt);
      const ParamVector p = infer(m, s.weights, read_landmarks_2d(inf_lm));
      detail::write_prediction(m, p, inf_neutral, inf_params, inf_mesh, inf_lm3);
      if (inf_params.empty()) out << params_to_json(p).dump(2) << "\n";
    } else if (*fit) {
      const HeadModel m = load_model(fit_model);
      const FitResult r = fit_single(m, read_landmarks_2d(fit_lm), std::nullopt, fit_cfg);
      detail::write_prediction(m, r.params, fit_neutral, fit_params, fit_mesh, fit_lm3);
      if (fit_params.empty()) out << params_to_json(r.params).dump(2) << "\n";
      out << "mean landmark residual " << r.mean_residual << " px\n";
    } else if (*ev) {
      const auto entries = read_eval_manifest(ev_manifest);
      std::vector<std::optional<Prediction>> preds;
      std::vector<ScanMesh> scans;
      for (const EvalEntry& e : entries) {
        ScanMesh s;
        s.image_id = e.image_id;
        s.subject = e.image_id;
        s.challenge = e.challenge;
        s.mesh = read_mesh(e.scan_mesh);
        s.landmarks = read_points(e.scan_landmarks);
        scans.push_back(std::move(s));
        if (e.prediction_mesh.empty() || !std::filesystem::exists(e.prediction_mesh) || e.prediction_landmarks.empty() ||
            !std::filesystem::exists(e.prediction_landmarks)) {
          preds.emplace_back(std::nullopt);
          continue;
        }
        preds.emplace_back(Prediction{read_mesh(e.prediction_mesh), read_points(e.prediction_landmarks)});
      }
      ev_opt.crop = !ev_no_crop;
      ev_opt.threads = threads;
      const EvalReport rep = evaluate(preds, scans, ev_opt);
      const std::filesystem::path dir = ev_out;
      std::filesystem::create_directories(dir);
      write_text(dir / "report.json", report_json(rep).dump(2) + "\n");
      write_text(dir / "curve.csv", curve_csv(rep.thresholds, rep.curve));
      write_text(dir / "curve.svg", render_curves_svg({{"all", rep.thresholds, rep.curve}}));
      out << "median " << rep.overall.median << " mm, mean " << rep.overall.mean << " mm, std " << rep.overall.std << " mm, "
          << rep.failures << " failed\n";
    } else if (*abl) {
      const HeadModel m = load_model(abl_model);
      const StoredDataset data = load_dataset(abl_data);
      TrainConfig cfg;
      if (!abl_config.empty()) apply_config_file(cfg, abl_config);
      if (abl_steps) cfg.steps = *abl_steps;
      if (seed_given) cfg.seed = seed;
      if (app.count("--threads")) cfg.threads = threads;
      Dataset train_set, validation;
      if (!abl_validation.empty()) {
        train_set = data.data;
        validation = load_dataset(abl_validation).data;
      } else {
        std::tie(train_set, validation) = split_per_identity(data.data, abl_holdout);
      }
      EvalOptions eo;
      eo.threads = cfg.threads;
      const auto rows = ablate_ring_size(m, train_set, validation, detail::parse_size_list(abl_rings), cfg, eo);
      write_text(abl_out, ablation_table(rows));
      out << ablation_table(rows);
    } else if (*plt) {
      std::vector<Curve> curves;
      for (const std::string& c : plt_curves) curves.push_back(parse_curve_csv(read_text(c), std::filesystem::path(c).stem().string()));
      write_text(plt_out, render_curves_svg(curves, plt_title));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int cli_main(int argc, char** argv) {
  return cli_main(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace ringnet
