// faceatlas command-line front end.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "faceatlas/adl.hpp"
#include "faceatlas/channels.hpp"
#include "faceatlas/evaluator.hpp"
#include "faceatlas/fixture.hpp"
#include "faceatlas/frame_io.hpp"
#include "faceatlas/parallel.hpp"
#include "faceatlas/pipeline.hpp"
#include "faceatlas/service.hpp"
#include "faceatlas/svg.hpp"

using namespace faceatlas;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

/// Errors caused by inputs or flags rather than by the program.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Inputs {
  std::string atlas;
  std::string channels;
  std::string semantics;
  std::string frame;
  std::string stream;
  std::string out;
  std::string svg;
  std::vector<std::string> select;
  bool pretty = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("faceatlas");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FACEATLAS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

AtlasProgram load_program(const std::string& path) {
  return compile_atlas(parse_atlas(read_text_file(path)));
}

SemanticsConfig load_semantics_or_default(const std::string& path) {
  return path.empty() ? default_semantics() : load_semantics(path);
}

std::vector<ChannelSpec> load_channels(const std::string& path, const AtlasProgram& program) {
  std::vector<ChannelSpec> specs;
  if (!path.empty()) specs = parse_channels(read_text_file(path));
  return bind_channels(std::move(specs), program);
}

LandmarkFrame load_frame_or_fixture(const std::string& path) {
  if (path.empty()) return synthetic_face();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  FrameReader reader(in);
  auto item = reader.next();
  if (!item) throw UsageError(path + ": no frame found");
  if (!item->frame) throw InvalidFrame(path + ":" + std::to_string(item->line) + ": " + item->error);
  return std::move(*item->frame);
}

/// Writes to --out, or stdout when empty.
void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageError("cannot write " + out);
  f << text;
}

std::string dump(const json& j, bool pretty) { return (pretty ? j.dump(2) : j.dump()) + "\n"; }

ChannelSelection selection_from(const std::vector<std::string>& codes, const AtlasProgram& program) {
  ChannelSelection sel = select_channels({codes.begin(), codes.end()}, program);
  for (const auto& u : sel.unknown) spdlog::warn("channel {} is not in the atlas", u);
  return sel;
}

void print_diagnostics(const AtlasError& e) {
  std::cerr << e.kind() << "\n";
  for (const auto& d : e.diagnostics()) std::cerr << "  " << format_diagnostic(d) << "\n";
}

// ---- subcommands --------------------------------------------------------------

int cmd_validate(const Inputs& in) {
  const AtlasProgram program = load_program(in.atlas);
  if (!in.channels.empty()) load_channels(in.channels, program);
  if (!in.semantics.empty()) load_semantics(in.semantics);
  std::cout << in.atlas << ": " << program.size() << " points, " << program.channels().size()
            << " channels\n"
            << format_census(census(program));
  return kExitOk;
}

int cmd_eval(const Inputs& in, int threads) {
  const AtlasProgram program = load_program(in.atlas);
  const SemanticsConfig cfg = load_semantics_or_default(in.semantics);
  const auto channels = load_channels(in.channels, program);
  const ChannelSelection sel = selection_from(in.select, program);

  if (!in.stream.empty()) {
    if (!in.svg.empty()) throw UsageError("--svg needs a single --frame");
    std::ifstream src(in.stream);
    if (!src) throw UsageError("cannot open " + in.stream);
    FrameReader reader(src);
    std::vector<LandmarkFrame> frames;
    std::size_t malformed = 0;
    while (auto item = reader.next()) {
      if (!item->frame) {
        spdlog::warn("{}:{}: skipped: {}", in.stream, item->line, item->error);
        ++malformed;
        continue;
      }
      frames.push_back(std::move(*item->frame));
    }
    std::string text;
    for (const auto& atlas : evaluate_frames(program, frames, cfg, threads)) {
      const EvaluatedAtlas filtered = filter_atlas(atlas, sel);
      if (filtered.degenerate) spdlog::warn("frame {}: {}", atlas.timestamp_us, atlas.degenerate_reason);
      text += to_json(filtered).dump() + "\n";
    }
    emit(in.out, text);
    spdlog::info("{} frames evaluated, {} malformed lines", frames.size(), malformed);
    return kExitOk;
  }

  if (in.frame.empty()) throw UsageError("eval needs --frame or --stream");
  const LandmarkFrame frame = load_frame_or_fixture(in.frame);
  const EvaluatedAtlas atlas = evaluate_atlas(program, frame, cfg, &sel.mask);
  if (atlas.degenerate) spdlog::warn("degenerate face: {}", atlas.degenerate_reason);
  emit(in.out, dump(to_json(atlas), in.pretty));
  if (!in.svg.empty()) {
    std::vector<ChannelSpec> shown;
    for (const auto& c : channels) {
      if (std::find(sel.channels.begin(), sel.channels.end(), c.code) != sel.channels.end()) {
        shown.push_back(c);
      }
    }
    std::ofstream svg(in.svg, std::ios::binary);
    if (!svg) throw UsageError("cannot write " + in.svg);
    svg << render_svg(atlas, program, shown);
  }
  return kExitOk;
}

int cmd_bench(const Inputs& in, std::size_t iterations) {
  const SemanticsConfig cfg = load_semantics_or_default(in.semantics);
  const LandmarkFrame frame = load_frame_or_fixture(in.frame);
  const BenchReport report = bench(read_text_file(in.atlas), frame, cfg, iterations);
  emit(in.out, dump(to_json(report), in.pretty));
  std::cerr << summary_line(report) << "\n";
  return kExitOk;
}

int cmd_experiment(const Inputs& in, double degrees) {
  const AtlasProgram program = load_program(in.atlas);
  const SemanticsConfig cfg = load_semantics_or_default(in.semantics);
  const LandmarkFrame frame = load_frame_or_fixture(in.frame);
  const PoseSweepReport report = accuracy_experiment(program, frame, cfg, standard_poses(degrees));
  emit(in.out, dump(to_json(report), in.pretty));
  return kExitOk;
}

int cmd_run(const Inputs& in, const RunOptions& options) {
  const AtlasProgram program = load_program(in.atlas);
  const SemanticsConfig cfg = load_semantics_or_default(in.semantics);
  const ChannelSelection sel = selection_from(in.select, program);
  if (in.stream.empty()) throw UsageError("run needs --stream");
  std::ifstream src;
  std::istream* input = &std::cin;
  if (in.stream != "-") {
    src.open(in.stream);
    if (!src) throw UsageError("cannot open " + in.stream);
    input = &src;
  }
  std::ofstream file;
  std::ostream* out = nullptr;
  if (!in.out.empty()) {
    if (in.out == "-") {
      out = &std::cout;
    } else {
      file.open(in.out, std::ios::binary);
      if (!file) throw UsageError("cannot write " + in.out);
      out = &file;
    }
  }
  FrameReader reader(*input);
  const RunSummary summary = run_stream(
      [&]() -> std::optional<FrameReader::Item> {
        auto item = reader.next();
        if (item && !item->frame) spdlog::warn("line {}: skipped: {}", item->line, item->error);
        return item;
      },
      program, cfg, options, [&](const EvaluatedAtlas& atlas) {
        if (out) *out << to_json(filter_atlas(atlas, sel)).dump() << "\n";
      });
  std::cerr << dump(to_json(summary), in.pretty);
  return kExitOk;
}

int cmd_serve(const Inputs& in, ServerOptions options) {
  AtlasProgram program = load_program(in.atlas);
  auto channels = load_channels(in.channels, program);
  auto engine = make_engine(std::move(program), load_semantics_or_default(in.semantics),
                            std::move(channels));
  Server server(engine, options);
  std::cout << "listening on " << options.host << ":" << server.port() << std::endl;
  spdlog::info("serving {} points", engine->program.size());
  server.run(true);
  return kExitOk;
}

struct FixtureArgs {
  int frames = 1;
  double fps = 30.0;
  int width = 640;
  int height = 640;
  double roll = 0.0;
  bool no_hair = false;
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

int cmd_fixture(const Inputs& in, const FixtureArgs& a) {
  if (a.frames < 1) throw UsageError("--frames must be positive");
  if (a.fps <= 0) throw UsageError("--fps must be positive");
  std::mt19937_64 rng(a.seed);
  std::string text;
  for (int i = 0; i < a.frames; ++i) {
    FixtureOptions opts;
    opts.width = a.width;
    opts.height = a.height;
    opts.roll_degrees = a.roll;
    opts.with_hair = !a.no_hair;
    opts.timestamp_us = static_cast<std::int64_t>(i * 1e6 / a.fps);
    LandmarkFrame frame = synthetic_face(opts);
    if (a.sigma > 0) frame = perturb(frame, rng, a.sigma);
    text += frame_to_line(frame) + "\n";
  }
  emit(in.out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Facial acupoint atlas compiler and evaluator"};
  app.require_subcommand(1);
  Inputs in;
  int threads = 0;
  std::size_t iterations = 1000;
  double degrees = 10.0;
  RunOptions run_options;
  ServerOptions server_options;
  FixtureArgs fixture_args;

  const auto atlas_opt = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--atlas", in.atlas, "Acupoint definition CSV")->check(CLI::ExistingFile);
    if (required) o->required();
  };
  const auto semantics_opt = [&](CLI::App* sub) {
    sub->add_option("--semantics", in.semantics, "Semantic vertex indices (JSON)")
        ->check(CLI::ExistingFile);
  };
  const auto channels_opt = [&](CLI::App* sub) {
    sub->add_option("--channels", in.channels, "Channel table CSV")->check(CLI::ExistingFile);
  };
  const auto select_opt = [&](CLI::App* sub) {
    sub->add_option("--select", in.select, "Channel codes to emit, e.g. ST,GB")->delimiter(',');
  };

  auto* validate = app.add_subcommand("validate", "Parse and compile an atlas, print the census");
  atlas_opt(validate);
  channels_opt(validate);
  semantics_opt(validate);

  auto* eval = app.add_subcommand("eval", "Evaluate an atlas on one frame or a JSONL stream");
  atlas_opt(eval);
  channels_opt(eval);
  semantics_opt(eval);
  select_opt(eval);
  auto* frame_opt = eval->add_option("--frame", in.frame, "Frame JSON file")->check(CLI::ExistingFile);
  eval->add_option("--stream", in.stream, "JSONL frames, evaluated as a batch")
      ->check(CLI::ExistingFile)
      ->excludes(frame_opt);
  eval->add_option("--out", in.out, "Output file (default stdout)");
  eval->add_option("--svg", in.svg, "Also write an SVG overlay");
  eval->add_flag("--pretty", in.pretty, "Indent JSON");
  eval->add_option("--threads", threads, "Batch threads (0 = OpenMP default)");

  auto* bench_cmd = app.add_subcommand("bench", "Time parse+compile and per-frame evaluation");
  atlas_opt(bench_cmd);
  semantics_opt(bench_cmd);
  bench_cmd->add_option("--frame", in.frame, "Frame JSON (default: built-in fixture)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--iterations", iterations, "Timed iterations")->check(CLI::Range(1, 10000000));
  bench_cmd->add_option("--out", in.out, "Output file (default stdout)");
  bench_cmd->add_flag("--pretty", in.pretty, "Indent JSON");

  auto* experiment = app.add_subcommand("experiment", "Pose sweep accuracy report");
  atlas_opt(experiment);
  semantics_opt(experiment);
  experiment->add_option("--frame", in.frame, "Frontal frame (default: built-in fixture)")
      ->check(CLI::ExistingFile);
  experiment->add_option("--degrees", degrees, "Rotation per posed axis");
  experiment->add_option("--out", in.out, "Output file (default stdout)");
  experiment->add_flag("--pretty", in.pretty, "Indent JSON");

  auto* run = app.add_subcommand("run", "Stream frames through the flow-limited pipeline");
  atlas_opt(run);
  semantics_opt(run);
  select_opt(run);
  run->add_option("--stream", in.stream, "JSONL frames, - for stdin")->required();
  run->add_option("--out", in.out, "Write one atlas per line here");
  run->add_option("--max-in-flight", run_options.max_in_flight)->check(CLI::PositiveNumber);
  run->add_flag("--paced", run_options.paced, "Replay at frame timestamps");
  run->add_option("--speed", run_options.speed, "Replay speed factor")->check(CLI::PositiveNumber);
  run->add_flag("--pretty", in.pretty, "Indent the summary");

  auto* serve = app.add_subcommand("serve", "WebSocket frame-in/atlas-out service");
  atlas_opt(serve);
  channels_opt(serve);
  semantics_opt(serve);
  serve->add_option("--port", server_options.port, "TCP port (0 picks one)");
  serve->add_option("--host", server_options.host, "Listen address");
  serve->add_option("--static", server_options.static_dir, "Directory served over HTTP")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--max-in-flight", server_options.max_in_flight)->check(CLI::PositiveNumber);
  serve->add_option("--workers", server_options.workers)->check(CLI::PositiveNumber);

  auto* fixture = app.add_subcommand("fixture", "Write synthetic landmark frames as JSONL");
  fixture->add_option("--out", in.out, "Output file (default stdout)");
  fixture->add_option("--frames", fixture_args.frames);
  fixture->add_option("--fps", fixture_args.fps);
  fixture->add_option("--width", fixture_args.width)->check(CLI::PositiveNumber);
  fixture->add_option("--height", fixture_args.height)->check(CLI::PositiveNumber);
  fixture->add_option("--roll", fixture_args.roll, "In-plane head roll, degrees");
  fixture->add_flag("--no-hair", fixture_args.no_hair, "Omit the hair mask");
  fixture->add_option("--sigma", fixture_args.sigma, "Landmark noise, normalized units");
  fixture->add_option("--seed", fixture_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUser;
  }

  try {
    if (*validate) return cmd_validate(in);
    if (*eval) return cmd_eval(in, threads);
    if (*bench_cmd) return cmd_bench(in, iterations);
    if (*experiment) return cmd_experiment(in, degrees);
    if (*run) return cmd_run(in, run_options);
    if (*serve) return cmd_serve(in, server_options);
    if (*fixture) return cmd_fixture(in, fixture_args);
  } catch (const AtlasError& e) {
    print_diagnostics(e);
    return kExitUser;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const InvalidFrame& e) {
    spdlog::error("invalid frame: {}", e.what());
    return kExitUser;
  } catch (const DegenerateFace& e) {
    spdlog::error("degenerate face: {}", e.what());
    return kExitUser;
  } catch (const UnknownPoint& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const PortInUse& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
