#include "velopad/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <thread>

#include "velopad/crosstalk.hpp"
#include "velopad/frame_log.hpp"
#include "velopad/report_io.hpp"
#include "velopad/service.hpp"
#include "velopad/session.hpp"
#include "velopad/wire.hpp"

namespace velopad {

namespace {

// Flag values in the units users type; converted into a SessionConfig.
struct ConfigFlags {
  std::size_t rows = 16;
  std::size_t cols = 16;
  double pitch_mm = 3.0;
  double line_width_mm = 0.254;
  double bias_ohm = 1000.0;
  double vdd = 3.3;
  int adc_bits = 10;
  int frames_n = 100;
  double frame_period_ms = 100.0;
  double blur_sigma = 0.6;
  std::string normalization = "sn";
  std::uint64_t seed = 1;
  std::string mechanisms = "all";
  bool ground_unselected = false;
  double noise_mv = 0.0;
  double diffusion_mm = 1.0;
  double bend_radius_cm = 0.0;  // 0 = flat
  std::string bend_axis = "horizontal";
  double bend_scale = 0.02;
  double r_off_ohm = 100e3;
  double r_on_ohm = 200.0;
  double p_half_n = 0.2;
  double gamma = 1.5;
  double r_sheet_ohm = 50e3;

  void add_to(CLI::App& app) {
    app.add_option("--rows", rows, "Sensor rows")->capture_default_str();
    app.add_option("--cols", cols, "Sensor columns")->capture_default_str();
    app.add_option("--pitch-mm", pitch_mm, "Electrode pitch (mm)")->capture_default_str();
    app.add_option("--line-width-mm", line_width_mm, "Electrode line width (mm)")->capture_default_str();
    app.add_option("--bias-ohm", bias_ohm, "Divider bias resistor (ohm)")->capture_default_str();
    app.add_option("--vdd", vdd, "Drive voltage (V)")->capture_default_str();
    app.add_option("--adc-bits", adc_bits, "ADC resolution")->capture_default_str()->check(CLI::Range(1, 16));
    app.add_option("--frames-n", frames_n, "Frames summed per capture")->capture_default_str();
    app.add_option("--frame-period-ms", frame_period_ms, "Raster cycle period (ms)")->capture_default_str();
    app.add_option("--blur-sigma", blur_sigma, "Gaussian blur sigma (pixels)")->capture_default_str();
    app.add_option("--normalization", normalization, "sn or softmax")
        ->capture_default_str()
        ->check(CLI::IsMember({"sn", "softmax"}));
    app.add_option("--seed", seed, "Noise seed")->capture_default_str();
    app.add_option("--mechanisms", mechanisms, "Crosstalk mechanisms: all, none, or sheet_paths,finite_off,diffusion")
        ->capture_default_str();
    app.add_flag("--ground-unselected", ground_unselected, "Tie unselected lines to ground");
    app.add_option("--noise-mv", noise_mv, "Per-reading Gaussian noise (mV)")->capture_default_str();
    app.add_option("--diffusion-mm", diffusion_mm, "Force diffusion length (mm)")->capture_default_str();
    app.add_option("--bend-radius-cm", bend_radius_cm, "Bending radius (cm, 0 = flat)")->capture_default_str();
    app.add_option("--bend-axis", bend_axis, "horizontal or vertical")
        ->capture_default_str()
        ->check(CLI::IsMember({"horizontal", "vertical"}));
    app.add_option("--bend-scale", bend_scale, "Bend stress scale (N*m)")->capture_default_str();
    app.add_option("--r-off-ohm", r_off_ohm, "Unpressed pixel resistance")->capture_default_str();
    app.add_option("--r-on-ohm", r_on_ohm, "Saturated pixel resistance")->capture_default_str();
    app.add_option("--p-half-n", p_half_n, "Force at half resistance drop (N)")->capture_default_str();
    app.add_option("--gamma", gamma, "Resistance law steepness")->capture_default_str();
    app.add_option("--r-sheet-ohm", r_sheet_ohm, "Lateral film resistance at 3 mm pitch")->capture_default_str();
  }

  SessionConfig build() const {
    SessionConfig c;
    nlohmann::json delta = {
        {"rows", rows},
        {"cols", cols},
        {"pitch-mm", pitch_mm},
        {"line-width-mm", line_width_mm},
        {"bias-ohm", bias_ohm},
        {"vdd", vdd},
        {"adc-bits", adc_bits},
        {"frames-n", frames_n},
        {"frame-period-ms", frame_period_ms},
        {"blur-sigma", blur_sigma},
        {"normalization", normalization},
        {"seed", seed},
        {"mechanisms", mechanisms},
        {"ground-unselected", ground_unselected},
        {"noise-mv", noise_mv},
        {"diffusion-mm", diffusion_mm},
        {"bend-radius-cm", bend_radius_cm},
        {"bend-axis", bend_axis},
        {"bend-scale", bend_scale},
        {"r-off-ohm", r_off_ohm},
        {"r-on-ohm", r_on_ohm},
        {"p-half-n", p_half_n},
        {"gamma", gamma},
        {"r-sheet-ohm", r_sheet_ohm},
    };
    apply_config_delta(c, delta);
    return c;
  }
};

class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback, bool binary) : stream_(&fallback) {
    if (path.empty() || path == "-") return;
    file_.open(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
    if (!file_) throw std::runtime_error("cannot open output file '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct SimulateOptions {
  std::string stimulus;
  std::string out;
  std::string format = "log";
  int captures = 1;
  bool emit_frames = false;
};

int cmd_simulate(const SessionConfig& config, const SimulateOptions& opt, std::ostream& out) {
  PadSession session(config);
  if (!opt.stimulus.empty()) {
    std::ifstream in(opt.stimulus);
    if (!in) throw std::runtime_error("cannot open stimulus file '" + opt.stimulus + "'");
    const Stimulus s = parse_stimulus(nlohmann::json::parse(in));
    session.load(s);
  }

  OutputTarget target(opt.out, out, opt.format == "wire");
  std::uint16_t seq = 0;
  for (int k = 0; k < opt.captures; ++k) {
    const CaptureJob job = session.prepare_capture();
    if (opt.format == "wire" || opt.emit_frames) {
      const auto adc_frames = capture_adc_frames(job).frames;
      for (std::size_t i = 0; i < adc_frames.size(); ++i) {
        const Frame& adc = adc_frames[i];
        if (opt.format == "wire") {
          const auto bytes = wire::encode(adc, seq++);
          target.stream().write(reinterpret_cast<const char*>(bytes.data()),
                                static_cast<std::streamsize>(bytes.size()));
        } else {
          const double t = job.start_time + static_cast<double>(i) * job.config.readout.frame_period;
          target.stream() << format_record({job.capture_id, t, Stage::adc, adc.values}) << '\n';
        }
      }
    }
    if (opt.format == "log") {
      const CaptureResult result = run_capture(job);
      write_frame_log(target.stream(), staged_records(result.staged, result.capture_id, result.timestamp));
    }
  }
  return 0;
}

struct CrosstalkOptions {
  std::string log;
  std::string pixel;
  bool per_pixel = false;
  bool sweep = false;
  std::vector<double> pitches_cm;
  std::vector<double> weights_kg{0.5};
  std::string output_format = "table";
};

std::optional<PixelIndex> parse_pixel(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--pixel expects ROW,COL");
  return PixelIndex{static_cast<std::size_t>(std::stoul(text.substr(0, comma))),
                    static_cast<std::size_t>(std::stoul(text.substr(comma + 1)))};
}

PixelIndex peak_pixel(const Frame& f) {
  const auto& v = f.values.values();
  const auto it = std::max_element(v.begin(), v.end());
  const auto i = static_cast<std::size_t>(std::distance(v.begin(), it));
  return {i / f.cols(), i % f.cols()};
}

int cmd_crosstalk(const SessionConfig& config, const CrosstalkOptions& opt, std::ostream& out, std::ostream& err) {
  if (!opt.log.empty()) {
    std::ifstream in(opt.log);
    if (!in) throw std::runtime_error("cannot open frame log '" + opt.log + "'");
    const auto ingested = ingest_external(in);
    for (const auto& e : ingested.errors) err << opt.log << ':' << e.line << ": " << e.message << '\n';
    const auto fixed = parse_pixel(opt.pixel);
    out << "capture_id,stage,row,col,crosstalk\n";
    for (const auto& f : ingested.frames) {
      const PixelIndex s = fixed ? *fixed : peak_pixel(f.frame);
      std::string value;
      try {
        const auto c = crosstalk_frame(f.frame, s);
        value = format_number(c.value);
        if (c.neighbor_exceeds_stimulus) err << "warning: capture " << f.capture_id << " has a neighbour above p0\n";
      } catch (const UndefinedMetricError&) {
        value = "undefined";
      }
      out << f.capture_id << ',' << to_string(f.stage) << ',' << s.row << ',' << s.col << ',' << value << '\n';
    }
    return ingested.errors.empty() ? 0 : 1;
  }

  CharacterizationSetup setup;
  setup.geometry = config.geometry;
  setup.model = config.model;
  setup.readout = config.readout;
  setup.diffusion_sigma = config.diffusion_sigma;
  setup.seed = config.seed;

  std::vector<double> pitches;
  if (opt.sweep && !opt.pitches_cm.empty()) {
    for (double p : opt.pitches_cm) pitches.push_back(p * 1e-2);
  } else {
    pitches.push_back(config.geometry.pitch);
  }
  const auto reports = characterize(setup, opt.weights_kg, pitches, opt.per_pixel);
  if (opt.output_format == "json") {
    out << reports_to_json(reports).dump(2) << '\n';
  } else {
    write_report_table(out, reports);
  }
  return 0;
}

struct ReplayOptions {
  std::string input;
  std::string out;
  double speed = 1.0;
};

int cmd_replay(const SessionConfig& config, const ReplayOptions& opt, std::ostream& out, std::ostream& err) {
  const auto bytes = read_bytes(opt.input);
  OutputTarget target(opt.out, out, false);
  wire::StreamDecoder decoder(wire::Dimensions{config.geometry.rows, config.geometry.cols});

  const auto n = static_cast<std::size_t>(config.pipeline.frames_per_capture);
  const double period = config.readout.frame_period;
  std::vector<Frame> pending;
  std::uint64_t frame_index = 0;
  std::uint64_t capture_id = 0;
  std::size_t decoded = 0;

  // Feed in device-sized chunks, as a live serial stream would arrive.
  constexpr std::size_t chunk = 64;
  for (std::size_t off = 0; off < bytes.size(); off += chunk) {
    const std::size_t len = std::min(chunk, bytes.size() - off);
    for (auto& wf : decoder.feed(std::span(bytes.data() + off, len))) {
      ++decoded;
      if (opt.speed > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(period / opt.speed));
      const double t = static_cast<double>(frame_index++) * period;
      target.stream() << format_record({capture_id, t, Stage::adc, wf.frame.values}) << '\n' << std::flush;
      pending.push_back(std::move(wf.frame));
      if (pending.size() == n) {
        const auto staged = run_pipeline(pending, config.pipeline);
        write_frame_log(target.stream(), staged_records(staged, capture_id, t + period));
        target.stream().flush();
        pending.clear();
        ++capture_id;
      }
    }
  }
  decoder.finish();
  const auto& d = decoder.diagnostics();
  err << "replay: decoded " << decoded << " frames; resyncs=" << d.resyncs << " crc_failures=" << d.crc_failures
      << " bad_headers=" << d.bad_headers << " truncated_tails=" << d.truncated_tails
      << " discarded_bytes=" << d.discarded_bytes << " incomplete_capture_frames=" << pending.size() << '\n';
  return 0;
}

int cmd_serve(SessionConfig config, const std::string& bind, bool fast, bool frames_given, std::ostream& out) {
  if (fast && !frames_given) config.set_frames_per_capture(5);
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("--bind expects HOST:PORT");
  const std::string host = bind.substr(0, colon);
  const auto port = static_cast<unsigned short>(std::stoul(bind.substr(colon + 1)));
  SessionServer server(config, host, port);
  out << "listening on ws://" << host << ':' << server.port() << '\n' << std::flush;
  server.run(2, true);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Velostat crossbar pad simulator", "padsim"};
  app.set_config("--config", "", "Config file (TOML/INI, keys are the long option names)");
  app.require_subcommand(1);
  app.fallthrough();

  ConfigFlags flags;
  flags.add_to(app);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate captures and write the staged frame log");
  simulate->add_option("--stimulus", sim.stimulus, "Stimulus JSON file (omit for a blank pad)");
  simulate->add_option("--out", sim.out, "Output path ('-' for stdout)");
  simulate->add_option("--format", sim.format, "log or wire")->check(CLI::IsMember({"log", "wire"}))->capture_default_str();
  simulate->add_option("--captures", sim.captures, "Number of captures")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_flag("--emit-frames", sim.emit_frames, "Also log every ADC frame");

  CrosstalkOptions xt;
  auto* crosstalk_cmd = app.add_subcommand("crosstalk", "Crosstalk metric on a frame log or a simulated sweep");
  crosstalk_cmd->add_option("--log", xt.log, "Frame log to evaluate");
  crosstalk_cmd->add_option("--pixel", xt.pixel, "Stimulated pixel ROW,COL (default: peak)");
  crosstalk_cmd->add_flag("--per-pixel", xt.per_pixel, "Stimulate every pixel in turn");
  crosstalk_cmd->add_flag("--sweep", xt.sweep, "Sweep pitches and weights");
  crosstalk_cmd->add_option("--pitches-cm", xt.pitches_cm, "Pitches for the sweep (cm)")->delimiter(',');
  crosstalk_cmd->add_option("--weights-kg", xt.weights_kg, "Weights (kg)")->delimiter(',')->capture_default_str();
  crosstalk_cmd->add_option("--output-format", xt.output_format, "table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();

  std::string bind = "127.0.0.1:8765";
  bool fast = false;
  auto* serve = app.add_subcommand("serve", "Run the interactive pad session service");
  serve->add_option("--bind", bind, "HOST:PORT")->capture_default_str();
  serve->add_flag("--fast", fast, "Fast mode: 5 frames per capture unless --frames-n is given");

  ReplayOptions rp;
  auto* replay = app.add_subcommand("replay", "Decode a wire capture and run it through the pipeline");
  replay->add_option("--input", rp.input, "Wire capture file")->required();
  replay->add_option("--out", rp.out, "Output frame log ('-' for stdout)");
  replay->add_option("--speed", rp.speed, "Playback speed factor (0 = no pacing)")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    const SessionConfig config = flags.build();
    if (simulate->parsed()) return cmd_simulate(config, sim, out);
    if (crosstalk_cmd->parsed()) return cmd_crosstalk(config, xt, out, err);
    if (replay->parsed()) return cmd_replay(config, rp, out, err);
    if (serve->parsed()) return cmd_serve(config, bind, fast, app.count("--frames-n") > 0, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace velopad
