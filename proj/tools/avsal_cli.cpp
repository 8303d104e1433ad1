#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avsal/avsal.hpp"

namespace fs = std::filesystem;
using namespace avsal;

namespace {

enum Exit : int { kOk = 0, kInputError = 1, kPipelineError = 2 };

PipelineConfig make_config(const std::string& file, const std::vector<std::string>& overrides,
                           std::optional<double> fps) {
  PipelineConfig c = file.empty() ? PipelineConfig{} : load_config(file);
  for (const auto& o : overrides) apply_override(c, o);
  if (fps) c.fps = *fps;
  validate(c);
  return c;
}

struct SaliencyArgs {
  std::string frames, audio, config, out;
  std::vector<std::string> set;
  std::optional<double> fps;
  bool intermediate = false;
  bool no_audio = false;
};

int cmd_saliency(const SaliencyArgs& a) {
  const PipelineConfig cfg = make_config(a.config, a.set, a.fps);
  const VideoClip clip = load_frame_sequence(a.frames, cfg.fps);
  std::optional<AudioTrack> audio;
  if (!a.no_audio) {
    if (a.audio.empty()) throw InputError("--audio is required unless --no-audio is given");
    audio = load_wav(a.audio);
  }
  const auto r = run_pipeline(clip, audio ? &*audio : nullptr, cfg);
  write_pipeline_outputs(r, a.out, a.intermediate);
  std::cerr << "wrote " << r.final_maps.size() << " maps to " << (fs::path(a.out) / "final").string() << '\n';
  return kOk;
}

struct EvalArgs {
  std::string maps, fixations, out, method = "avsal", video, config;
  std::optional<std::size_t> frame_limit;
};

int cmd_eval(const EvalArgs& a) {
  MetricConfig mc = make_config(a.config, {}, std::nullopt).metrics;
  if (a.frame_limit) mc.frame_limit = *a.frame_limit;
  const auto indexed = read_saliency_dir(a.maps);
  if (indexed.empty()) throw InputError("no saliency maps in " + a.maps);
  const std::size_t w = indexed.front().second.width(), h = indexed.front().second.height();
  const FixationSet fix = load_fixations(a.fixations, w, h);

  const std::size_t last = indexed.back().first;
  std::vector<SaliencyMap> maps(last + 1);
  std::vector<bool> present(last + 1, false);
  for (const auto& [i, m] : indexed) {
    if (!m.same_shape(indexed.front().second)) throw FormatError("saliency maps differ in size");
    maps[i] = m;
    present[i] = true;
  }
  const std::string video = a.video.empty() ? fs::path(a.maps).lexically_normal().filename().string() : a.video;
  MetricReport report;
  report.video = video;
  const std::size_t limit = mc.frame_limit > 0 ? std::min(mc.frame_limit, maps.size()) : maps.size();
  std::vector<std::size_t> missing;
  for (std::size_t t = 0; t < limit; ++t) {
    if (!present[t]) {
      missing.push_back(t);
      continue;
    }
    report.frames.push_back(evaluate_frame(maps[t], fix.points(t), t, mc));
  }
  const std::size_t fix_frames = fix.frames.size();
  for (std::size_t t = maps.size(); t < std::min(fix_frames, mc.frame_limit > 0 ? mc.frame_limit : fix_frames); ++t) {
    if (!fix.points(t).empty()) missing.push_back(t);
  }
  report.mean = average(report.frames);
  if (!missing.empty()) {
    std::string s = "missing saliency maps for frames:";
    for (auto t : missing) s += ' ' + std::to_string(t);
    report.diagnostics.push_back(s);
  }
  if (fix.dropped > 0) report.diagnostics.push_back(std::to_string(fix.dropped) + " out-of-bounds fixations dropped");
  if (report.empty()) report.diagnostics.push_back("no frame with defined metrics");
  for (const auto& d : report.diagnostics) std::cerr << "eval: " << d << '\n';

  fs::path out(a.out);
  const fs::path stem = out.extension() == ".csv" || out.extension() == ".json" ? fs::path(out).replace_extension() : out;
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  write_report_csv({report}, fs::path(stem).concat(".csv"));
  write_report_json({report}, a.method, fs::path(stem).concat(".json"));
  if (fix.total() == 0 || report.empty()) return kInputError;
  const auto& m = report.mean;
  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
  std::cout << "AUC " << show(m.auc) << "  D_KL " << show(m.kl) << "  NSS " << show(m.nss) << "  CC " << show(m.cc)
            << '\n';
  return kOk;
}

int cmd_synth(const std::string& spec_file, const std::string& out, std::uint64_t seed) {
  const SyntheticSpec spec = spec_file.empty() ? two_disc_spec() : load_synthetic_spec(spec_file);
  write_synthetic(synthesize(spec, seed), out);
  std::cerr << "wrote synthetic clip to " << out << '\n';
  return kOk;
}

struct BenchArgs {
  std::string frames, audio, config;
  std::vector<std::string> set;
  std::size_t workers = 4, batch = 4;
};

int cmd_bench(const BenchArgs& a) {
  const PipelineConfig cfg = make_config(a.config, a.set, std::nullopt);
  std::vector<BatchJob> jobs;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, a.batch); ++i) {
    BatchJob j;
    j.name = "job" + std::to_string(i);
    j.frames = a.frames;
    if (!a.audio.empty()) j.audio = fs::path(a.audio);
    jobs.push_back(j);
  }
  auto run = [&](std::size_t workers) {
    const auto start = std::chrono::steady_clock::now();
    const auto outcomes = run_batch(jobs, cfg, workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& o : outcomes) {
      if (!o.ok) throw PipelineError("batch", o.name + ": " + o.error);
    }
    return std::pair{secs, outcomes};
  };
  const auto [serial, outcomes] = run(1);
  StageTimings per_video = outcomes.front().timings;
  print_timing_table(std::cout, per_video, outcomes.front().frames);
  std::cout << "batch of " << jobs.size() << ", 1 worker: " << serial << " s\n";
  if (a.workers > 1) {
    const auto [parallel, unused] = run(a.workers);
    (void)unused;
    std::cout << "batch of " << jobs.size() << ", " << a.workers << " workers: " << parallel << " s (speedup "
              << serial / parallel << "x, " << std::thread::hardware_concurrency() << " hardware threads)\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audiovisual saliency pipeline"};
  app.require_subcommand(1);

  SaliencyArgs sa;
  auto* sal = app.add_subcommand("saliency", "compute per-frame saliency maps");
  sal->add_option("--frames", sa.frames, "directory of numbered frames")->required();
  sal->add_option("--audio", sa.audio, "WAV soundtrack");
  sal->add_option("--config", sa.config, "key = value config file");
  sal->add_option("--out", sa.out, "output directory")->required();
  sal->add_option("--set", sa.set, "config override key=value");
  sal->add_option("--fps", sa.fps, "frame rate");
  sal->add_flag("--dump-intermediate", sa.intermediate, "also write audio/visual/motion maps and tracks");
  sal->add_flag("--no-audio", sa.no_audio, "visual + motion only");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "score maps against fixations");
  ev->add_option("--maps", ea.maps, "directory of saliency maps")->required();
  ev->add_option("--fixations", ea.fixations, "fixation CSV")->required();
  ev->add_option("--out", ea.out, "report path (.csv and .json are both written)")->required();
  ev->add_option("--frame-limit", ea.frame_limit, "evaluate at most this many frames");
  ev->add_option("--method", ea.method, "method name for the JSON table");
  ev->add_option("--video", ea.video, "video name");
  ev->add_option("--config", ea.config, "config file for eval.* keys");

  std::string spec_file, synth_out;
  std::uint64_t seed = 1;
  auto* sy = app.add_subcommand("synth", "render a synthetic audiovisual clip");
  sy->add_option("--spec", spec_file, "synthetic spec file (default: two discs)");
  sy->add_option("--out", synth_out, "output directory")->required();
  sy->add_option("--seed", seed, "random seed");

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "per-stage timing and batch speedup");
  be->add_option("--frames", ba.frames, "directory of numbered frames")->required();
  be->add_option("--audio", ba.audio, "WAV soundtrack");
  be->add_option("--config", ba.config, "config file");
  be->add_option("--set", ba.set, "config override key=value");
  be->add_option("--workers", ba.workers, "parallel workers");
  be->add_option("--batch", ba.batch, "copies of the clip in the batch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*sal) return cmd_saliency(sa);
    if (*ev) return cmd_eval(ea);
    if (*sy) return cmd_synth(spec_file, synth_out, seed);
    if (*be) return cmd_bench(ba);
  } catch (const PipelineError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
    return kPipelineError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPipelineError;
  }
  return kOk;
}
