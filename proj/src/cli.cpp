// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/cli.hpp>
#include <voxtrack/kernels.hpp>
#include <voxtrack/metrics.hpp>
#include <voxtrack/simulator.hpp>
#include <voxtrack/tracker.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace voxtrack {

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path.string());
  out << text;
  if (!out) raise(ErrorCode::IoError, "write failed on " + path.string());
}

struct TrackFlags {
  std::string sequence_dir;
  std::string out_path = "pred.txt";
  std::string config_path;
  std::string stats_path;
  std::string kernels = "auto";
  bool no_danc = false;
  bool no_docm = false;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_overrides(CLI::App* cmd, TrackFlags& flags) {
  // Every TrackerConfig key doubles as a --key flag; flags win over the
  // config file.
  static const char* keys[] = {
      "delta_v",      "alpha",        "tau_iou",     "score_high",
      "score_low",    "min_hits",     "max_age",     "w_iou",
      "w_docm",       "w_app",        "gate_iou",    "gate_iou_low",
      "occlusion_metric", "projection_mode", "kappa", "iou_mode",
      "track_cloud_mode", "delta_t_hist", "ema_embedding", "q_depth",
      "q_depth_vel",  "r_depth",      "threads"};
  for (const char* key : keys) {
    std::string name = "--";
    for (const char* p = key; *p; ++p) name += (*p == '_') ? '-' : *p;
    cmd->add_option_function<std::string>(
        name,
        [&flags, key](const std::string& value) {
          flags.overrides.emplace_back(key, value);
        },
        std::string("override config key ") + key);
  }
}

TrackerConfig resolve_config(const TrackFlags& flags) {
  TrackerConfig config;
  if (!flags.config_path.empty()) config = load_config_file(flags.config_path);
  for (const auto& [key, value] : flags.overrides)
    apply_config_entry(config, key, value);
  if (flags.no_danc) config.danc = false;
  if (flags.no_docm) config.docm = false;
  if (const char* env = std::getenv("VOXTRACK_THREADS")) {
    bool has_thread_flag = false;
    for (const auto& [key, value] : flags.overrides)
      if (key == "threads") has_thread_flag = true;
    if (!has_thread_flag) apply_config_entry(config, "threads", env);
  }
  config.validate();
  return config;
}

int cmd_simulate(const std::string& preset, uint64_t seed, int frames,
                 int objects, const std::string& out_dir) {
  SceneSpec spec;
  if (preset == "crossing") {
    spec = crossing_preset(seed);
  } else if (preset == "mixed") {
    spec = mixed_preset(objects, seed);
  } else {
    std::cerr << "unknown preset '" << preset << "'\n";
    return 1;
  }
  if (frames > 0) spec.n_frames = frames;
  generate_scene(spec, out_dir);
  std::cerr << "wrote " << out_dir << " (" << spec.n_frames << " frames, "
            << spec.objects.size() << " objects)\n";
  return 0;
}

int cmd_track(const TrackFlags& flags) {
  kernels::force(flags.kernels.c_str());
  const TrackerConfig config = resolve_config(flags);
  const Sequence seq = Sequence::parse(flags.sequence_dir);
  for (const auto& w : seq.warnings()) std::cerr << "warning: " << w << "\n";
  auto [rows, stats] = run_sequence(seq, config);
  write_mot_rows(rows, flags.out_path);
  if (!flags.stats_path.empty())
    write_text_file(flags.stats_path, stats.to_text(config));
  std::cerr << "tracked " << stats.frames << " frames, " << rows.size()
            << " rows -> " << flags.out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& gt_path, const std::string& pred_path,
                 double iou_thr, double min_vis, const std::string& report_path,
                 const std::string& curve_path) {
  const std::vector<MotRow> gt = read_gt_rows(gt_path);
  const std::vector<MotRow> pred = read_mot_rows(pred_path);
  EvalOptions options;
  options.iou_threshold = iou_thr;
  options.min_visibility = min_vis;
  const EvalReport report = evaluate(gt, pred, options);
  std::fputs(report.to_text().c_str(), stdout);
  if (!report_path.empty()) write_text_file(report_path, report.to_text());
  if (!curve_path.empty()) write_text_file(curve_path, report.curve_csv());
  return 0;
}

int cmd_report(const std::string& sequence_dir, const std::string& gt_path,
               const std::string& out_path, const std::string& kernels) {
  kernels::force(kernels.c_str());
  const Sequence seq = Sequence::parse(sequence_dir);
  const std::vector<MotRow> gt = read_gt_rows(
      gt_path.empty() ? (std::filesystem::path(sequence_dir) / "gt.txt").string()
                      : gt_path);

  struct Variant {
    const char* name;
    void (*tweak)(TrackerConfig&);
  };
  static const Variant variants[] = {
      {"full", [](TrackerConfig&) {}},
      {"no_danc", [](TrackerConfig& c) { c.danc = false; }},
      {"no_docm", [](TrackerConfig& c) { c.docm = false; }},
      {"box2d_iou", [](TrackerConfig& c) { c.iou_mode = IouMode::Box2D; }},
      {"bbox_projection",
       [](TrackerConfig& c) { c.projection_mode = ProjectionMode::BoundingBox; }},
      {"baseline_2d",
       [](TrackerConfig& c) {
         c.iou_mode = IouMode::Box2D;
         c.danc = false;
         c.docm = false;
       }},
  };

  std::string csv = "variant,idf1,hota,mota,deta,assa,idsw,fp,fn\n";
  for (const Variant& variant : variants) {
    TrackerConfig config;
    variant.tweak(config);
    auto [rows, stats] = run_sequence(seq, config);
    std::vector<MotRow> pred;
    pred.reserve(rows.size());
    for (const auto& r : rows) {
      MotRow m;
      m.frame = r.frame;
      m.id = r.id;
      m.box = Box{static_cast<float>(r.bb_left), static_cast<float>(r.bb_top),
                  static_cast<float>(r.bb_left + r.bb_width),
                  static_cast<float>(r.bb_top + r.bb_height)};
      m.conf = r.conf;
      pred.push_back(m);
    }
    const EvalReport rep = evaluate(gt, pred);
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%ld,%ld,%ld\n",
                  variant.name, rep.idf1, rep.hota, rep.mota, rep.deta,
                  rep.assa, rep.id_switches, rep.fp, rep.fn);
    csv += line;
  }
  if (out_path.empty() || out_path == "-")
    std::fputs(csv.c_str(), stdout);
  else
    write_text_file(out_path, csv);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"depth-aware voxel multi-object tracker"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic sequence");
  std::string preset = "crossing";
  uint64_t seed = 42;
  int frames = 0, objects = 10;
  std::string sim_out = "scene";
  sim->add_option("--preset", preset, "crossing | mixed");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--frames", frames, "override frame count");
  sim->add_option("--objects", objects, "object count (mixed preset)");
  sim->add_option("--out", sim_out, "output directory")->required();

  // track
  auto* track = app.add_subcommand("track", "run the tracker on a sequence");
  TrackFlags flags;
  track->add_option("sequence", flags.sequence_dir, "sequence directory")->required();
  track->add_option("--out", flags.out_path, "prediction file");
  track->add_option("--config", flags.config_path, "key=value config file");
  track->add_option("--stats", flags.stats_path, "run-stats report file");
  track->add_option("--kernels", flags.kernels, "scalar | avx2 | auto");
  track->add_flag("--no-danc", flags.no_danc, "disable adaptive noise scaling");
  track->add_flag("--no-docm", flags.no_docm, "disable 3D motion consistency");
  add_config_overrides(track, flags);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score predictions against gt");
  std::string gt_path, pred_path, report_path, curve_path;
  double iou_thr = 0.5, min_vis = 0.0;
  eval->add_option("gt", gt_path, "gt.txt")->required();
  eval->add_option("pred", pred_path, "prediction file")->required();
  eval->add_option("--iou-thr", iou_thr, "matching IoU threshold");
  eval->add_option("--min-vis", min_vis, "minimum gt visibility");
  eval->add_option("--report", report_path, "also write the report here");
  eval->add_option("--curve", curve_path, "write the HOTA alpha curve CSV");

  // report
  auto* report = app.add_subcommand("report", "ablation CSV over config variants");
  std::string rep_seq, rep_gt, rep_out = "-", rep_kernels = "auto";
  report->add_option("sequence", rep_seq, "sequence directory")->required();
  report->add_option("--gt", rep_gt, "gt file (default <sequence>/gt.txt)");
  report->add_option("--out", rep_out, "output CSV ('-' for stdout)");
  report->add_option("--kernels", rep_kernels, "scalar | avx2 | auto");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(preset, seed, frames, objects, sim_out);
    if (track->parsed()) return cmd_track(flags);
    if (eval->parsed())
      return cmd_evaluate(gt_path, pred_path, iou_thr, min_vis, report_path,
                          curve_path);
    if (report->parsed()) return cmd_report(rep_seq, rep_gt, rep_out, rep_kernels);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace voxtrack
