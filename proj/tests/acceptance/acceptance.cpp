// Acceptance runner: one PASS/FAIL line per criterion. The exit status is
// nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ringnet/ringnet.hpp"
#include "temp_dir.hpp"
#include "test_support.hpp"

using namespace ringnet;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs(const DenseArray& a, const std::vector<Eigen::Vector3d>& b) {
  double m = 0.0;
  for (std::size_t v = 0; v < b.size(); ++v)
    for (std::size_t c = 0; c < 3; ++c) m = std::max(m, std::abs(a(v, c) - b[v][static_cast<Eigen::Index>(c)]));
  return m;
}

// ---------------------------------------------------------------- criterion 1

Verdict decoder_exactness() {
  const HeadModel& m = test_support::desk_model();
  const double zero_err = max_abs_difference(decode_vertices(m, ParamVector::zeros(ParamLayout::of(m))), m.template_vertices);
  std::mt19937_64 rng(101);
  std::normal_distribution<double> angle(0.0, 0.4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto beta = test_support::random_vector(rng, m.num_shape());
    const auto psi = test_support::random_vector(rng, m.num_expression());
    DenseArray pose = DenseArray::zeros(m.num_joints() + 1, 3);
    for (double& v : pose.storage()) v = angle(rng);
    worst = std::max(worst, max_abs(decode_pose(m, beta, pose, psi), oracle::skin(m, beta, pose, psi)));
  }
  return {zero_err <= 1e-12 && worst <= 1e-10,
          "zero-param deviation " + fmt(zero_err) + " (<= 1e-12), LBS oracle max deviation " + fmt(worst) + " over 100 configurations (<= 1e-10)"};
}

// ---------------------------------------------------------------- criterion 2

Eigen::MatrixXd mat(const DenseArray& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return m;
}

/// One ring slice (R = 3) with fixed dropout masks.
struct GradConfig {
  HeadModel model;
  EncoderWeights weights;
  DenseArray features;  // standardized, R x F
  std::vector<ad::LandmarkTarget> targets;
  DropoutMasks masks;
  LossWeights loss;
};

GradConfig make_grad_config(std::uint64_t seed) {
  ModelGeneratorConfig mc;
  mc.latitude_rings = 12;
  mc.longitude_segments = 20;
  mc.num_shape = 10;
  mc.num_expression = 5;
  mc.seed = seed;
  GradConfig g{generate_head_model(mc), {}, {}, {}, {}, {}};
  SynthConfig sc;
  sc.identities = 2;
  sc.images_per_identity = 2;
  sc.seed = seed;
  const Dataset d = make_dataset(g.model, sc);
  const std::size_t order[3] = {0, 1, 2};  // identity 0 twice, then identity 1
  std::mt19937_64 rng = derive_rng(seed, 0x67726164);
  EncoderConfig ec;
  ec.hidden = 8;
  ec.output_init_scale = 0.3;
  const std::size_t f = feature_dim(g.model.landmarks.size());
  DenseArray raw({3, f});
  for (std::size_t e = 0; e < 3; ++e) {
    const Landmarks2D& lm = d.observations[order[e]].landmarks;
    const Features x = extract_features(lm, ec.confidence_threshold);
    std::copy(x.values.storage().begin(), x.values.storage().end(), raw.data() + e * f);
    g.targets.push_back({x.normalization.apply(lm.positions), lm.confidence});
  }
  g.weights = init_encoder(ec, f, ParamLayout::of(g.model).size(), rng, &raw);
  g.weights.b1 = test_support::random_array(rng, {1, ec.hidden}, 0.1);
  g.weights.b2 = test_support::random_array(rng, {1, ec.hidden}, 0.1);
  g.weights.b3 = test_support::random_array(rng, {1, g.weights.output_dim()}, 0.05);
  g.features = standardize(raw, g.weights);
  g.masks = sample_dropout(ec, 3, rng);
  return g;
}

ad::Var loss_of_params(ad::Tape& tape, const GradConfig& g, ad::Var params) {
  const ModelTerms terms(tape, g.model);
  const CameraFrame frame = model_frame(g.model);
  std::vector<ad::Var> projected;
  for (std::size_t e = 0; e < 3; ++e) projected.push_back(ad::projected_landmarks(terms, ad::slice_rows(params, e, e + 1), frame));
  return ad::total_loss(params, projected, g.targets, ParamLayout::of(g.model), g.loss, 1, 3).total;
}

DenseArray params_of(const GradConfig& g) {
  ad::Tape tape;
  const ad::EncoderVars vars(tape, g.weights, false);
  return ad::encode(vars, tape.constant(g.features), g.masks).value();
}

/// Smallest distance of any non-smooth quantity in L_tot to its kink: ReLU
/// inputs, ring hinge arguments, L1 residuals and contour yaw breakpoints.
double kink_distance(const GradConfig& g) {
  double best = std::numeric_limits<double>::infinity();
  const EncoderWeights& w = g.weights;
  const Eigen::MatrixXd x = mat(g.features), w1 = mat(w.w1), w2 = mat(w.w2), w3 = mat(w.w3);
  const Eigen::RowVectorXd b1 = mat(w.b1), b2 = mat(w.b2), b3 = mat(w.b3);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(x.rows(), w3.cols());
  for (std::size_t t = 0; t < w.config.iterations; ++t) {
    Eigen::MatrixXd in(x.rows(), x.cols() + f.cols());
    in << x, f;
    const Eigen::MatrixXd a1 = (in * w1).rowwise() + b1;
    best = std::min(best, a1.cwiseAbs().minCoeff());
    const Eigen::MatrixXd h1 = a1.cwiseMax(0.0).cwiseProduct(mat(g.masks.masks[t][0]));
    const Eigen::MatrixXd a2 = (h1 * w2).rowwise() + b2;
    best = std::min(best, a2.cwiseAbs().minCoeff());
    f += (a2.cwiseMax(0.0).cwiseProduct(mat(g.masks.masks[t][1])) * w3).rowwise() + b3;
  }
  const ParamLayout layout = ParamLayout::of(g.model);
  const DenseArray p = params_of(g);
  auto d2 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < layout.num_shape; ++c) {
      const double d = p(a, ParamLayout::kShape + c) - p(b, ParamLayout::kShape + c);
      s += d * d;
    }
    return s;
  };
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) best = std::min(best, std::abs(d2(j, k) - d2(j, 2) + g.loss.margin));
  const CameraFrame frame = model_frame(g.model);
  for (std::size_t e = 0; e < 3; ++e) {
    const ParamVector pv = ParamVector::from_flat(p.values().subspan(e * p.cols(), p.cols()), layout);
    const DenseArray proj = projected_landmarks(g.model, pv, frame);
    for (std::size_t i = 0; i < proj.rows(); ++i) {
      if (!(g.targets[e].confidence[i] > g.loss.confidence_threshold)) continue;
      for (std::size_t c = 0; c < 2; ++c) best = std::min(best, std::abs(proj(i, c) - g.targets[e].positions(i, c)));
    }
    const double yaw = yaw_degrees(rodrigues(pv.global_rot));
    for (const auto& samples : g.model.landmarks.contour)
      for (const ContourSample& s : samples) best = std::min(best, std::abs(yaw - s.yaw_deg));
  }
  return best;
}

Verdict differentiability() {
  constexpr double kStep = 1e-7;
  double worst = 0.0;
  std::string where = "none";
  std::size_t resampled = 0, checked = 0;
  std::uint64_t seed = 200;
  for (int config = 0; config < 20; ++config) {
    std::optional<GradConfig> g;
    while (true) {
      g = make_grad_config(seed++);
      if (kink_distance(*g) >= 1e-6) break;
      ++resampled;
    }
    auto note = [&](const GradCheckResult& r, const std::string& name) {
      ++checked;
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        where = name + " (configuration " + std::to_string(config) + ")";
      }
    };
    for (std::size_t b = 0; b < EncoderWeights::kNumBlocks; ++b) {
      const auto fn = [&](ad::Tape& tape, ad::Var v) {
        ad::EncoderVars vars(tape, g->weights, false);
        vars.blocks[b] = v;
        return loss_of_params(tape, *g, ad::encode(vars, tape.constant(g->features), g->masks));
      };
      note(grad_check(fn, *g->weights.blocks()[b], kStep), EncoderWeights::block_names()[b]);
    }
    note(grad_check([&](ad::Tape& tape, ad::Var v) { return loss_of_params(tape, *g, v); }, params_of(*g), kStep), "ParamVector");
  }
  return {worst < 1e-4, "max relative error " + fmt(worst) + " at " + where + " over " + std::to_string(checked) +
                            " block checks in 20 configurations (N = 242, " + std::to_string(resampled) +
                            " resampled near a kink)"};
}

// ---------------------------------------------------------------- criterion 3

Verdict loss_arithmetic() {
  std::vector<std::string> bad;
  if (shape_consistency_loss(DenseArray({1, 3, 2}, {0, 0, 0, 0, 1, 0}), 0.5) != 0.0) bad.push_back("L_SC margin case");
  if (shape_consistency_loss(DenseArray({1, 3, 2}, {0.3, -1, 0.3, -1, 0.3, -1}), 0.5) != 2.0 / 3.0) bad.push_back("L_SC collapsed case");
  const DenseArray zero({2, 2}, {0, 0, 0, 0});
  if (reprojection_loss(DenseArray({2, 2}, {3, 4, 0, 0}), zero, {1, 1}, 0.41) != 1.75) bad.push_back("L_proj 1.75 case");
  if (reprojection_loss(DenseArray({2, 2}, {3, 4, 5, 6}), zero, {0.41, 0.2}, 0.41) != 0.0) bad.push_back("L_proj unconfident case");
  const DenseArray k({2, 2}, {1, 2, 3, 4});
  if (reprojection_loss(k, k, {1, 1}, 0.41) != 0.0) bad.push_back("L_proj exact case");
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const DenseArray betas = test_support::random_array(rng, {2, 4, 5}, 0.4);
    std::vector<std::vector<std::vector<double>>> nested(2, std::vector<std::vector<double>>(4, std::vector<double>(5)));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t c = 0; c < 5; ++c) nested[i][j][c] = betas(i, j, c);
    worst = std::max(worst, std::abs(shape_consistency_loss(betas, 0.5) - oracle::ring_loss(nested, 0.5)));
  }
  std::string detail = bad.empty() ? "5 hand examples exact" : "mismatched: ";
  for (std::size_t i = 0; i < bad.size(); ++i) detail += (i ? ", " : "") + bad[i];
  return {bad.empty() && worst <= 1e-12, detail + "; triple-loop oracle max deviation " + fmt(worst) + " over 100 batches (<= 1e-12)"};
}

// ------------------------------------------------------------ criteria 4 and 5

struct RingExperiment {
  ShapeConsistencyReport consistency;
  double baseline_median = 0.0;
  double trained_median = 0.0;
  double seconds = 0.0;
};

std::pair<Dataset, Dataset> experiment_split() {
  SynthConfig sc;
  sc.identities = 8;
  sc.images_per_identity = 12;
  sc.seed = 1;
  return split_per_identity(make_dataset(test_support::desk_model(), sc), 4);
}

TrainConfig experiment_config(std::size_t steps) {
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.seed = 1;
  return cfg;
}

const RingExperiment& ring_experiment() {
  static const RingExperiment r = [] {
    const auto start = std::chrono::steady_clock::now();
    const HeadModel& m = test_support::desk_model();
    const auto [train_set, held_out] = experiment_split();
    const TrainConfig cfg = experiment_config(2000);
    RingExperiment out;
    const TrainState init = init_training(m, train_set, cfg);
    out.baseline_median = reconstruction_report(m, predicted_shapes(m, init.weights, held_out), held_out).overall.median;
    const TrainResult trained = train(m, train_set, cfg);
    const auto shapes = predicted_shapes(m, trained.state.weights, held_out);
    out.trained_median = reconstruction_report(m, shapes, held_out).overall.median;
    out.consistency = shape_consistency_metrics(shapes, labels_of(held_out), cfg.loss.margin, 2000, 1);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }();
  return r;
}

Verdict ring_training_effect() {
  const RingExperiment& r = ring_experiment();
  const auto& c = r.consistency;
  return {c.within_mean < c.cross_mean && c.margin_fraction >= 0.70 && r.seconds < 900.0,
          "held-out within-identity mean " + fmt(c.within_mean) + " vs cross-identity " + fmt(c.cross_mean) +
              "; margin holds for " + fmt(100.0 * c.margin_fraction) + "% of " + std::to_string(c.triples) +
              " triples (>= 70%); 2000 steps in " + fmt(r.seconds) + " s"};
}

Verdict reconstruction_improvement() {
  const RingExperiment& r = ring_experiment();
  const double ratio = r.trained_median / r.baseline_median;
  return {ratio <= 0.5, "held-out median " + fmt(r.trained_median) + " mm vs untrained " + fmt(r.baseline_median) +
                            " mm, ratio " + fmt(ratio) + " (<= 0.5)"};
}

// ---------------------------------------------------------------- criterion 6

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
  return out;
}

Mesh random_soup(std::mt19937_64& rng, std::size_t triangles) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), small(-0.3, 0.3);
  Mesh m;
  for (std::size_t t = 0; t < triangles; ++t) {
    const Vec3 c(u(rng), u(rng), u(rng));
    for (int k = 0; k < 3; ++k) m.vertices.push_back(c + Vec3(small(rng), small(rng), small(rng)));
    const auto b = static_cast<std::uint32_t>(3 * t);
    m.faces.push_back({b, b + 1, b + 2});
  }
  return m;
}

Verdict evaluation_oracles() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> scale(0.5, 2.0), shift(-50.0, 50.0);
  double sim_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto src = random_points(rng, 7, 50.0);
    const SimilarityTransform truth{scale(rng), random_rotation(rng), Vec3(shift(rng), shift(rng), shift(rng))};
    const SimilarityTransform t = similarity_from_landmarks(src, truth.apply(src));
    sim_err = std::max({sim_err, std::abs(t.scale - truth.scale), (t.rotation - truth.rotation).norm(),
                        (t.translation - truth.translation).norm()});
  }

  std::size_t bvh_mismatches = 0;
  for (int set = 0; set < 50; ++set) {
    const Mesh m = random_soup(rng, 100);
    const Bvh bvh(m);
    for (const Vec3& p : random_points(rng, 200, 2.0))
      if (bvh.closest(p).distance != closest_point_brute_force(m, p).distance) ++bvh_mismatches;
  }

  const HeadModel& model = test_support::small_model();
  const Mesh head = make_mesh(model.template_vertices, model.faces);
  const Bvh head_bvh(head);
  std::vector<Vec3> samples;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, head.faces.size() - 1);
  for (int i = 0; i < 1000; ++i) {
    const Face& f = head.faces[pick(rng)];
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
    samples.push_back(head.vertices[f[0]] + a * (head.vertices[f[1]] - head.vertices[f[0]]) +
                      b * (head.vertices[f[2]] - head.vertices[f[0]]));
  }
  const SimilarityTransform perturb{1.02, Eigen::AngleAxisd(0.03, Vec3(0.3, 1.0, 0.2).normalized()).toRotationMatrix(),
                                    Vec3(1.0, -0.5, 0.8)};
  IcpOptions opt;
  opt.max_iters = 1000;
  opt.tol = 0.0;
  const IcpResult icp = icp_refine(perturb.apply(samples), head_bvh, SimilarityTransform{}, opt);
  const double icp_rel = std::max({std::abs(icp.transform.scale - perturb.scale) / (perturb.scale - 1.0),
                                   (icp.transform.rotation - perturb.rotation).norm() /
                                       (perturb.rotation - Eigen::Matrix3d::Identity()).norm(),
                                   (icp.transform.translation - perturb.translation).norm() / perturb.translation.norm()});

  const std::vector<double> beta(model.num_shape(), 0.3);
  const EvalReport self = evaluate({neutral_prediction(model, beta)}, {neutral_scan(model, beta, "self")});
  double self_max = 0.0;
  for (double d : self.images[0].distances) self_max = std::max(self_max, d);
  const bool unit_curve = std::all_of(self.curve.begin(), self.curve.end(), [](double c) { return c == 1.0; });

  return {sim_err <= 1e-8 && bvh_mismatches == 0 && icp_rel <= 1e-4 && self_max == 0.0 && unit_curve,
          "similarity max error " + fmt(sim_err) + " over 1000 transforms; BVH mismatches " + std::to_string(bvh_mismatches) +
              " over 50 sets; ICP relative error " + fmt(icp_rel) + "; self-evaluation max distance " + fmt(self_max) +
              (unit_curve ? ", unit curve" : ", curve below 1")};
}

// ---------------------------------------------------------------- criterion 7

Verdict ablation_harness() {
  const HeadModel& m = test_support::desk_model();
  const Dataset train_set = experiment_split().first;
  SynthConfig vc;
  vc.identities = 4;
  vc.images_per_identity = 4;
  vc.seed = 2;
  const Dataset validation = make_dataset(m, vc);
  const std::vector<std::size_t> rings = {3, 4, 5, 6};
  const auto rows = ablate_ring_size(m, train_set, validation, rings, experiment_config(600));
  std::cout << ablation_table(rows);
  bool ok = rows.size() == rings.size();
  for (std::size_t i = 0; ok && i < rows.size(); ++i)
    ok = rows[i].ring == rings[i] && std::isfinite(rows[i].error.mean) && rows[i].error.count > 0;
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].error.mean <= rows[i - 1].error.mean;
  std::string trend;
  for (const auto& r : rows) trend += (trend.empty() ? "" : " -> ") + fmt(r.error.mean);
  return {ok, "four rows under 600 steps each; mean error R=3..6: " + trend + " mm (" +
                  (monotone ? "monotone decreasing" : "not monotone") + ", reported only)"};
}

// ---------------------------------------------------------------- criterion 8

Verdict determinism_and_round_trips() {
  test_support::TempDir dir("acceptance");
  std::vector<std::string> bad;
  const HeadModel& small = test_support::small_model();

  SynthConfig sc;
  sc.identities = 4;
  sc.images_per_identity = 5;
  sc.seed = 8;
  // Each run writes the same file name into its own directory.
  const std::filesystem::path run1 = dir / "run1", run2 = dir / "run2";
  std::filesystem::create_directories(run1);
  std::filesystem::create_directories(run2);
  auto same_files = [&](const std::string& stem) {
    return read_bytes(run1 / (stem + ".json")) == read_bytes(run2 / (stem + ".json")) &&
           read_bytes(run1 / (stem + ".bin")) == read_bytes(run2 / (stem + ".bin"));
  };
  save_dataset(make_dataset(small, sc), sc, run1 / "data.json");
  save_dataset(make_dataset(small, sc), sc, run2 / "data.json");
  if (!same_files("data")) bad.push_back("synth output differs between runs");

  const Dataset d = load_dataset(run1 / "data.json").data;
  TrainConfig tc;
  tc.steps = 10;
  tc.slices = 2;
  tc.encoder.hidden = 32;
  tc.seed = 8;
  save_checkpoint(train(small, d, tc).state, run1 / "encoder.json");
  const TrainState trained = train(small, d, tc).state;
  save_checkpoint(trained, run2 / "encoder.json");
  if (!same_files("encoder")) bad.push_back("training output differs between runs");
  if (!(load_checkpoint(run2 / "encoder.json") == trained)) bad.push_back("checkpoint round-trip not bit-exact");

  save_model(test_support::desk_model(), dir / "m1.json");
  const HeadModel loaded = load_model(dir / "m1.json");
  save_model(loaded, dir / "m2.json");
  if (read_bytes(dir / "m1.bin") != read_bytes(dir / "m2.bin") || !(load_model(dir / "m2.json") == loaded))
    bad.push_back("model asset round-trip not bit-exact");

  std::mt19937_64 rng(808);
  ParamVector p = ParamVector::zeros(ParamLayout::of(small));
  p.shape = test_support::random_vector(rng, small.num_shape());
  p.global_rot = {0.1, -0.3, 0.05};
  const Mesh mesh = decode(small, p);
  write_obj(mesh, dir / "mesh.obj");
  const Mesh back = read_obj(dir / "mesh.obj");
  double obj_err = back.vertices.size() == mesh.vertices.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; std::isfinite(obj_err) && i < mesh.vertices.size(); ++i)
    obj_err = std::max(obj_err, (back.vertices[i] - mesh.vertices[i]).cwiseAbs().maxCoeff());
  if (!(obj_err <= 1e-6) || back.faces != mesh.faces) bad.push_back("OBJ round-trip error " + fmt(obj_err));

  std::string detail = "synth and train byte-identical, checkpoint and asset bit-exact, OBJ max error " + fmt(obj_err);
  if (!bad.empty()) {
    detail = "";
    for (std::size_t i = 0; i < bad.size(); ++i) detail += (i ? "; " : "") + bad[i];
  }
  return {bad.empty(), detail};
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0: no runtime bound
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "decoder exactness", 10.0, decoder_exactness},
      {2, "differentiability", 120.0, differentiability},
      {3, "loss arithmetic", 0.0, loss_arithmetic},
      {4, "ring training effect", 0.0, ring_training_effect},
      {5, "reconstruction improvement", 0.0, reconstruction_improvement},
      {6, "evaluation-protocol oracles", 120.0, evaluation_oracles},
      {7, "ablation harness", 0.0, ablation_harness},
      {8, "determinism and round-trips", 0.0, determinism_and_round_trips},
  };
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("-c,--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds >= c.budget_seconds) {
      v.pass = false;
      v.detail += "; over the " + fmt(c.budget_seconds) + " s budget";
    }
    if (!v.pass) ++failures;
    std::cout << "criterion " << c.id << " " << (v.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << v.detail << " ["
              << fmt(seconds) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
