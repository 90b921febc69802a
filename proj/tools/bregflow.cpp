// Command-line front end: compute flow fields, evaluate them against ground
// truth, render the color coding, and run the solver diagnostics.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "bregflow/evaluation.hpp"
#include "bregflow/io.hpp"
#include "bregflow/presets.hpp"
#include "bregflow/solvers.hpp"

using namespace bregflow;
namespace fs = std::filesystem;

namespace {

// Exit codes, also listed in --help:
//   0 success, 1 solver/runtime failure, 2 missing input file,
//   3 file format error, 4 dimension mismatch, 5 invalid parameters/usage.
constexpr int kExitRuntime = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitFormat = 3;
constexpr int kExitDimensions = 4;
constexpr int kExitBadParams = 5;

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success, 1 solver/runtime failure, 2 missing input file, "
    "3 file format error, 4 dimension mismatch, 5 invalid parameters/usage.";

int map_exception(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  if (dynamic_cast<const FileError*>(&e)) return kExitMissingFile;
  if (dynamic_cast<const FormatError*>(&e)) return kExitFormat;
  if (dynamic_cast<const std::invalid_argument*>(&e))
    return std::string(e.what()).find("mismatch") != std::string::npos ? kExitDimensions
                                                                       : kExitBadParams;
  return kExitRuntime;
}

struct ParamCli {
  std::string model = "osb";
  std::string preset;
  double lambda = 0.0, mu = 0.0, gamma = 0.0, sigma = 0.0, pyramid_scale = 0.9;
  int bregman_iters = 0, sweeps = 0, gs_iters = 0;
  bool median = true, occlusion = false;

  CLI::App* sub = nullptr;

  void attach(CLI::App* s, bool with_model = true) {
    sub = s;
    if (with_model)
      s->add_option("--model", model, "Flow model")
          ->check(CLI::IsMember({"osb", "brox", "horn_schunck"}));
    s->add_option("--preset", preset, "Parameter preset (error-table row)")
        ->check(CLI::IsMember(
            {"rubberwhale-osb", "grove2-osb", "rubberwhale-brox", "grove2-brox"}));
    s->add_option("--lambda", lambda, "Data term weight");
    s->add_option("--mu", mu, "Bregman coupling weight");
    s->add_option("--gamma", gamma, "Gradient constancy weight");
    s->add_option("--sigma", sigma, "Presmoothing standard deviation");
    s->add_option("--bregman-iters", bregman_iters, "Outer Bregman iterations (N)");
    s->add_option("--sweeps", sweeps, "Alternating minimization sweeps (M)");
    s->add_option("--gs-iters", gs_iters, "Gauss-Seidel sweeps per u,v solve");
    s->add_option("--pyramid-scale", pyramid_scale, "Pyramid scale factor")->capture_default_str();
    s->add_flag("--median,!--no-median", median, "Median-filter upsampled flow (default on)");
    s->add_flag("--occlusion,!--no-occlusion", occlusion,
                "Cross-checking occlusion handling (default off)");
    s->set_config("--config", "", "Read options from an INI config file");
  }

  // Precedence: explicit flags (and config file) > preset > built-in defaults.
  std::pair<FlowModel, SolverParams> resolve() const {
    SolverParams p;
    FlowModel m = FlowModel::Osb;
    if (preset == "rubberwhale-osb") p = presets::osb_rubberwhale();
    else if (preset == "grove2-osb") p = presets::osb_grove2();
    else if (preset == "rubberwhale-brox") { p = presets::brox_rubberwhale(); m = FlowModel::Brox; }
    else if (preset == "grove2-brox") { p = presets::brox_grove2(); m = FlowModel::Brox; }
    else {
      p.lambda = 0.05;
      p.mu = 10.0;
      p.sigma = 0.5;
      p.bregman_iters = 30;
      p.sweeps = 3;
      p.gs_iters = 10;
    }
    if (sub->count("--model")) {
      if (model == "osb") m = FlowModel::Osb;
      else if (model == "brox") m = FlowModel::Brox;
      else m = FlowModel::HornSchunck;
    }
    if (sub->count("--lambda")) p.lambda = lambda;
    if (sub->count("--mu")) p.mu = mu;
    if (sub->count("--gamma")) p.gamma = gamma;
    if (sub->count("--sigma")) p.sigma = sigma;
    if (sub->count("--bregman-iters")) p.bregman_iters = bregman_iters;
    if (sub->count("--sweeps")) p.sweeps = sweeps;
    if (sub->count("--gs-iters")) p.gs_iters = gs_iters;
    if (sub->count("--pyramid-scale")) p.pyramid_scale = pyramid_scale;
    p.median_radius = median ? 1 : 0;
    p.occlusion_on = occlusion;
    p.validate();
    return {m, p};
  }
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw FileError("missing input file: " + path);
}

void write_trace_csv(const BregmanTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot open file for writing: " + path);
  out << "k,constraint_penalty,energy\n";
  for (const auto& r : trace.records) {
    if (r.k < 1) continue;  // one data row per Bregman iteration
    out << r.k << "," << r.h << "," << r.cost << "\n";
  }
  for (const auto& w : trace.warnings) out << "# warning: " << w << "\n";
}

void print_trace_summary(const BregmanTrace& trace) {
  if (trace.records.size() < 2) return;
  std::printf("trace: constraint penalty %.6g -> %.6g over %zu iterations, %zu warning(s)\n",
              trace.records[1].h, trace.back().h, trace.size() - 1, trace.warnings.size());
}

int cmd_flow(const std::string& frame0, const std::string& frame1, const ParamCli& cli,
             const std::string& out_path, const std::string& viz_path,
             const std::string& trace_path) {
  require_file(frame0);
  require_file(frame1);
  const auto [model, params] = cli.resolve();
  const Image f0 = read_image(frame0);
  const Image f1 = read_image(frame1);

  BregmanTrace trace;
  const auto start = std::chrono::steady_clock::now();
  const FlowField flow = compute_flow(f0, f1, model, params, &trace);
  const double rt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_flo(flow, out_path);
  if (!viz_path.empty()) write_image(colorize_flow(flow), viz_path);
  if (!trace_path.empty()) write_trace_csv(trace, trace_path);
  std::printf("flow written to %s (RT %.2f s)\n", out_path.c_str(), rt);
  print_trace_summary(trace);
  return 0;
}

int cmd_eval(const std::string& flow_path, const std::string& truth_path) {
  require_file(flow_path);
  require_file(truth_path);
  const FlowField flow = read_flo(flow_path);
  const FlowField truth = read_flo(truth_path);
  const ErrorReport rep = evaluate_flow(flow, truth);
  std::printf("AAE %.2f  AEE %.2f\n", rep.aae, rep.aee);
  return 0;
}

int cmd_viz(const std::string& flow_path, const std::string& out_path, double max_magnitude) {
  require_file(flow_path);
  write_image(colorize_flow(read_flo(flow_path), max_magnitude), out_path);
  std::printf("visualization written to %s\n", out_path.c_str());
  return 0;
}

int cmd_diag(const std::string& frame0, const std::string& frame1, const ParamCli& cli,
             int spd_trials, const std::string& trace_path, double envelope_d0, double q_norm) {
  require_file(frame0);
  require_file(frame1);
  const auto [model, params] = cli.resolve();
  const Image f0 = gaussian_smooth(read_image(frame0), params.sigma);
  const Image f1 = gaussian_smooth(read_image(frame1), params.sigma);

  const Derivatives derivs = derivatives(f0, f1);
  const MotionTensor tensor = assemble_motion_tensor(derivs, params.gamma);
  const double theta = model == FlowModel::Brox ? params.mu / 2.0 : params.mu / params.lambda;

  const SpdReport spd = spd_check(tensor, theta, spd_trials);
  std::cout << spd.summary();
  if (spd.min_random_form > 0.0)
    std::cout << "min quadratic form > 0 on all random probes\n";
  if (spd.planar_degenerate)
    std::cout << "degeneracy flagged: planar image, constant flow orthogonal to the gradient "
                 "has zero quadratic form\n";

  BregmanTrace trace;
  if (model == FlowModel::HornSchunck) {
    solve_horn_schunck(tensor, params.mu / params.lambda, params.bregman_iters * params.gs_iters);
    std::cout << "baseline model has no Bregman trace\n";
    return 0;
  }
  const LevelResult res = model == FlowModel::Brox
                              ? solve_brox_level(tensor, params, FlowField(f0.width, f0.height))
                              : solve_osb_level(tensor, params, FlowField(f0.width, f0.height));
  trace = res.trace;

  // report from the first genuine Bregman iterate on; the solvers start at
  // the zero field, which is not a subgradient-feasible point
  BregmanTrace from_first;
  from_first.records.assign(trace.records.begin() + 1, trace.records.end());
  from_first.warnings = trace.warnings;
  const auto rep = convergence_report(
      from_first, params.mu, envelope_d0 > 0.0 ? std::optional<double>(envelope_d0) : std::nullopt,
      q_norm > 0.0 ? std::optional<double>(q_norm) : std::nullopt);
  std::cout << rep.summary();
  if (!trace_path.empty()) write_trace_csv(trace, trace_path);
  print_trace_summary(trace);
  return 0;
}

int cmd_reproduce_table3(std::string data_dir) {
  if (data_dir.empty()) {
    if (const char* env = std::getenv("BREGFLOW_DATA"); env && *env) data_dir = env;
  }
  if (data_dir.empty() || !fs::exists(fs::path(data_dir) / "RubberWhale"))
    throw FileError("missing input file: benchmark data not found; pass --data or set "
                    "BREGFLOW_DATA to a directory with RubberWhale/ and Grove2/");

  struct Row {
    const char* sequence;
    FlowModel model;
    const char* model_name;
    SolverParams params;
  };
  const Row rows[] = {
      {"RubberWhale", FlowModel::Osb, "osb", presets::osb_rubberwhale()},
      {"Grove2", FlowModel::Osb, "osb", presets::osb_grove2()},
      {"RubberWhale", FlowModel::Brox, "brox", presets::brox_rubberwhale()},
      {"Grove2", FlowModel::Brox, "brox", presets::brox_grove2()},
  };

  std::printf("%-12s %-5s %-8s %-7s %-7s %-6s %-7s %-7s %s\n", "Sequence", "Model", "lambda",
              "mu", "gamma", "sigma", "AAE", "AEE", "RT[s]");
  for (const Row& row : rows) {
    const fs::path dir = fs::path(data_dir) / row.sequence;
    std::string f0;
    for (const char* ext : {".png", ".pgm", ".ppm"})
      if (fs::exists(dir / (std::string("frame10") + ext))) f0 = (dir / (std::string("frame10") + ext)).string();
    std::string f1;
    for (const char* ext : {".png", ".pgm", ".ppm"})
      if (fs::exists(dir / (std::string("frame11") + ext))) f1 = (dir / (std::string("frame11") + ext)).string();
    const fs::path gt = dir / "flow10.flo";
    if (f0.empty() || f1.empty() || !fs::exists(gt))
      throw FileError("missing input file: " + (dir / "frame10.*").string());

    const Image i0 = read_image(f0);
    const Image i1 = read_image(f1);
    const FlowField truth = read_flo(gt.string());
    const auto start = std::chrono::steady_clock::now();
    const FlowField flow = compute_flow(i0, i1, row.model, row.params);
    const double rt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const ErrorReport rep = evaluate_flow(flow, truth);
    std::printf("%-12s %-5s %-8.4f %-7.2f %-7.2f %-6.2f %-7.2f %-7.2f %.0f\n", row.sequence,
                row.model_name, row.params.lambda, row.params.mu, row.params.gamma,
                row.params.sigma, rep.aae, rep.aee, rt);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("bregflow - split Bregman optical flow toolkit\n") + kExitCodeHelp};
  app.require_subcommand(1);

  // flow
  auto* flow = app.add_subcommand("flow", "Compute the flow field between two frames");
  std::string frame0, frame1, out_path = "flow.flo", viz_path, trace_path;
  ParamCli flow_params;
  flow->add_option("frame0", frame0, "First frame (pgm/ppm/png)")->required();
  flow->add_option("frame1", frame1, "Second frame")->required();
  flow_params.attach(flow);
  flow->add_option("--out", out_path, "Output .flo path")->capture_default_str();
  flow->add_option("--viz-out", viz_path, "Optional color rendering (ppm/png)");
  flow->add_option("--trace-csv", trace_path, "Optional per-iteration trace CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a flow field against ground truth");
  std::string eval_flow, eval_truth;
  eval->add_option("flow", eval_flow, "Estimated .flo")->required();
  eval->add_option("truth", eval_truth, "Ground-truth .flo")->required();

  // viz
  auto* viz = app.add_subcommand("viz", "Render a flow field with the color wheel");
  std::string viz_flow, viz_out = "flow.ppm";
  double viz_max = 0.0;
  viz->add_option("flow", viz_flow, "Input .flo")->required();
  viz->add_option("--out", viz_out, "Output image (ppm/png)")->capture_default_str();
  viz->add_option("--max-magnitude", viz_max,
                  "Magnitude mapped to full saturation (default: 99th percentile)");

  // diag
  auto* diag = app.add_subcommand("diag", "Positive-definiteness and convergence diagnostics");
  std::string diag_f0, diag_f1, diag_trace;
  int spd_trials = 1000;
  double envelope_d0 = 0.0, q_norm = 0.0;
  ParamCli diag_params;
  diag->add_option("frame0", diag_f0, "First frame")->required();
  diag->add_option("frame1", diag_f1, "Second frame")->required();
  diag_params.attach(diag);
  diag->add_option("--spd-trials", spd_trials, "Random probes for the quadratic form")->capture_default_str();
  diag->add_option("--trace-csv", diag_trace, "Write the Bregman trace as CSV");
  diag->add_option("--envelope-d0", envelope_d0,
                   "Initial Bregman distance for the 1/k envelope check");
  diag->add_option("--q-norm", q_norm, "Source-condition ||q|| for the error-bound check");

  // reproduce-table3
  auto* repro =
      app.add_subcommand("reproduce-table3", "Re-run the benchmark error table on both sequences");
  std::string data_dir;
  repro->add_option("--data", data_dir, "Dataset directory (default: $BREGFLOW_DATA)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadParams;
  }

  try {
    if (flow->parsed()) return cmd_flow(frame0, frame1, flow_params, out_path, viz_path, trace_path);
    if (eval->parsed()) return cmd_eval(eval_flow, eval_truth);
    if (viz->parsed()) return cmd_viz(viz_flow, viz_out, viz_max);
    if (diag->parsed())
      return cmd_diag(diag_f0, diag_f1, diag_params, spd_trials, diag_trace, envelope_d0, q_norm);
    if (repro->parsed()) return cmd_reproduce_table3(data_dir);
  } catch (const std::exception& e) {
    return map_exception(e);
  }
  return kExitBadParams;
}
