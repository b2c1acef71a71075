// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/kirchhoff.hpp"
#include "support.hpp"
#include "velopad/circuit.hpp"
#include "velopad/crosstalk.hpp"
#include "velopad/frame_log.hpp"
#include "velopad/pipeline.hpp"
#include "velopad/session.hpp"
#include "velopad/wire.hpp"

using namespace velopad;

namespace {

// Pinned tolerances and limits.
constexpr double worked_value = 0.02868;
constexpr double worked_tolerance = 1e-4;
constexpr double metric_time_limit_ms = 1.0;
constexpr int property_cases = 10000;
constexpr int census_grids = 500;
constexpr int oracle_cases = 1000;
constexpr double oracle_rel_tolerance = 1e-9;
constexpr double sweep_time_limit_s = 10.0;
constexpr double sweep_diffusion = 12e-3;  // m, fixed across pitches
constexpr int suppression_cases = 1000;
constexpr double pipeline_time_limit_ms = 10.0;
constexpr double scan_time_limit_s = 1.0;
constexpr int wire_cases = 10000;
constexpr double legibility_overlap = 0.8;

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

template <class F>
double median_ms(int runs, F&& f) {
  std::vector<double> t;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = clock_type::now();
    f();
    t.push_back(ms_since(t0));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CrosstalkInput worked_input() {
  return {1.94, {{1.0, 0.15}, {std::numbers::sqrt2, 0.0}, {1.0, 0.04}}};
}

Outcome worked_example() {
  Outcome o;
  const double c = crosstalk(worked_input()).value;
  o.require(std::abs(c - worked_value) <= worked_tolerance, "direct value " + fmt("%.6f", c));

  std::ifstream in(VELOPAD_TEST_DATA "/corner_example.log");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  double end_to_end = NAN;
  const double t_ingest = median_ms(101, [&] {
    std::istringstream s(text);
    const auto r = ingest_external(s);
    end_to_end = crosstalk_frame(r.frames.at(0).frame, {0, 0}).value;
  });
  o.require(std::abs(end_to_end - worked_value) <= worked_tolerance, "ingested value " + fmt("%.6f", end_to_end));

  const double t_metric = median_ms(101, [&] { (void)crosstalk(worked_input()); });
  o.require(t_metric < metric_time_limit_ms, "metric time");
  o.require(t_ingest < metric_time_limit_ms, "ingest time");
  o.note("C=" + fmt("%.6f", c) + " ingested C=" + fmt("%.6f", end_to_end) + " metric " + fmt("%.4f", t_metric) +
         " ms, ingest+metric " + fmt("%.4f", t_ingest) + " ms");
  return o;
}

CrosstalkInput random_input(std::mt19937_64& rng, bool bounded) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 8);
  CrosstalkInput in;
  in.stimulated_reading = 0.01 + 10.0 * unit(rng);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double d = unit(rng) < 0.5 ? 1.0 : std::numbers::sqrt2;
    in.neighbors.push_back({d, bounded ? in.stimulated_reading * unit(rng) : 20.0 * unit(rng)});
  }
  return in;
}

Outcome metric_properties() {
  Outcome o;
  std::mt19937_64 rng(0xC0FFEE);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> logk(std::log(1e-3), std::log(1e3));
  int fail_scale = 0, fail_bounds = 0, fail_mono = 0, fail_dist = 0;
  for (int i = 0; i < property_cases; ++i) {
    auto in = random_input(rng, false);
    const double base = crosstalk(in).value;
    auto scaled = in;
    const double k = std::exp(logk(rng));
    scaled.stimulated_reading *= k;
    for (auto& n : scaled.neighbors) n.reading *= k;
    if (std::abs(crosstalk(scaled).value - base) > 1e-12 * std::max(1.0, base)) ++fail_scale;

    const auto bounded = random_input(rng, true);
    const double cb = crosstalk(bounded).value;
    bool zero = true;
    for (const auto& n : bounded.neighbors) zero = zero && n.reading == 0.0;
    if (cb < 0.0 || cb > 1.0 || ((cb == 0.0) != zero)) ++fail_bounds;

    auto up = in;
    up.neighbors[static_cast<std::size_t>(i) % up.neighbors.size()].reading += unit(rng);
    auto louder = in;
    louder.stimulated_reading += unit(rng);
    if (crosstalk(up).value < base || crosstalk(louder).value > base) ++fail_mono;

    const double p0 = 0.01 + unit(rng);
    const double p = 0.001 + unit(rng);
    const CrosstalkInput adjacent{p0, {{1.0, p}, {std::numbers::sqrt2, 0.0}, {1.0, 0.0}}};
    const CrosstalkInput diagonal{p0, {{1.0, 0.0}, {std::numbers::sqrt2, p}, {1.0, 0.0}}};
    if (!(crosstalk(diagonal).value > crosstalk(adjacent).value)) ++fail_dist;
  }
  o.require(fail_scale == 0, std::to_string(fail_scale) + " scale");
  o.require(fail_bounds == 0, std::to_string(fail_bounds) + " bounds");
  o.require(fail_mono == 0, std::to_string(fail_mono) + " monotonicity");
  o.require(fail_dist == 0, std::to_string(fail_dist) + " distance weighting");
  o.note(std::to_string(property_cases) + " cases per property");
  return o;
}

Outcome census() {
  Outcome o;
  std::mt19937_64 rng(0xCE45);
  std::uniform_int_distribution<std::size_t> dim(3, 20);
  int failures = 0;
  for (int g = 0; g < census_grids; ++g) {
    const std::size_t R = dim(rng);
    const std::size_t C = dim(rng);
    std::size_t corner = 0, edge = 0, centre = 0;
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const auto h = neighborhood({r, c}, R, C);
        corner += h.kind == NeighborhoodKind::corner;
        edge += h.kind == NeighborhoodKind::edge;
        centre += h.kind == NeighborhoodKind::center;
      }
    }
    if (corner != 4 || edge != 2 * (R - 2) + 2 * (C - 2) || centre != (R - 2) * (C - 2)) ++failures;
  }
  o.require(failures == 0, std::to_string(failures) + " grids");
  const auto a = neighborhood({0, 0}, 5, 5).members.size();
  const auto b = neighborhood({0, 2}, 5, 5).members.size();
  const auto c = neighborhood({2, 2}, 5, 5).members.size();
  o.require(a == 3 && b == 5 && c == 8, "5x5 member counts");
  o.note(std::to_string(census_grids) + " random grids; 5x5 counts " + std::to_string(a) + "/" + std::to_string(b) +
         "/" + std::to_string(c));
  return o;
}

Outcome solver_oracle() {
  Outcome o;
  std::mt19937_64 rng(0x0AC1E);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  std::uniform_real_distribution<double> logr(std::log(100.0), std::log(2e5));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < oracle_cases; ++i) {
    oracle::CrossbarCase k;
    k.rows = dim(rng);
    k.cols = dim(rng);
    for (std::size_t p = 0; p < k.rows * k.cols; ++p) {
      k.pixel_ohms.push_back(unit(rng) < 0.15 ? INFINITY : std::exp(logr(rng)));
    }
    if (unit(rng) < 0.5) k.lateral_ohms = std::exp(logr(rng));
    k.bias_ohms = std::exp(logr(rng));
    k.vdd = 1.0 + 4.0 * unit(rng);
    k.sel_row = std::uniform_int_distribution<std::size_t>(0, k.rows - 1)(rng);
    k.sel_col = std::uniform_int_distribution<std::size_t>(0, k.cols - 1)(rng);
    k.ground_unselected = unit(rng) < 0.3;

    ResistorNetwork net(k.rows, k.cols, std::isfinite(k.lateral_ohms));
    for (std::size_t r = 0; r < k.rows; ++r) {
      for (std::size_t c = 0; c < k.cols; ++c) net.pixel(r, c).resistance = k.pixel_ohms[r * k.cols + c];
    }
    if (net.has_junctions()) {
      for (std::size_t r = 0; r < k.rows; ++r) {
        for (std::size_t c = 0; c < k.cols; ++c) {
          if (c + 1 < k.cols) net.add_lateral({net.junction_node(r, c), net.junction_node(r, c + 1), k.lateral_ohms});
          if (r + 1 < k.rows) net.add_lateral({net.junction_node(r, c), net.junction_node(r + 1, c), k.lateral_ohms});
        }
      }
    }
    ReadoutConfig cfg;
    cfg.v_dd = k.vdd;
    cfg.r_bias = k.bias_ohms;
    cfg.ground_unselected = k.ground_unselected;

    const double expected = oracle::solve_sense_voltage(k);
    const double got = read_pixel(net, {k.sel_row, k.sel_col}, cfg);
    const double err = std::abs(got - expected);
    if (expected == 0.0 ? got != 0.0 : err > oracle_rel_tolerance * std::abs(expected)) ++failures;
    if (expected != 0.0) worst = std::max(worst, err / std::abs(expected));
  }
  o.require(failures == 0, std::to_string(failures) + " mismatches");

  int divider_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    ReadoutConfig cfg;
    cfg.r_bias = std::exp(logr(rng));
    const double R = std::exp(logr(rng));
    ResistorNetwork net(3, 3, false);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) net.pixel(r, c).resistance = open_circuit;
    }
    net.pixel(i % 3, (i / 3) % 3).resistance = R;
    const PixelIndex at{static_cast<std::size_t>(i % 3), static_cast<std::size_t>((i / 3) % 3)};
    if (read_pixel(net, at, cfg) != cfg.v_dd * cfg.r_bias / (cfg.r_bias + R)) ++divider_failures;
  }
  o.require(divider_failures == 0, std::to_string(divider_failures) + " divider cases");
  o.note(std::to_string(oracle_cases) + " networks, worst relative error " + fmt("%.2e", worst) +
         "; divider exact in 1000 cases");
  return o;
}

Outcome crosstalk_off() {
  Outcome o;
  SensorGeometry g;
  g.rows = 5;
  g.cols = 5;
  ReadoutConfig cfg;
  cfg.mechanisms = Mechanisms::all_off();
  const double sigma = effective_diffusion_sigma(cfg.mechanisms, 2e-3);
  int bad = 0;
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const WeightStimulus w{{r, c}, 0.5, 1e-4};
      const auto field = rasterize_stimulus({}, std::span(&w, 1), g, sigma).field;
      const auto frame = scan_frame(g, field, VelostatModel{}, cfg, 1);
      for (std::size_t i = 0; i < frame.values.size(); ++i) {
        if (i != r * g.cols + c && frame.values.values()[i] != 0.0) ++bad;
      }
      if (crosstalk_frame(frame, {r, c}).value != 0.0) ++bad;
    }
  }
  o.require(bad == 0, std::to_string(bad) + " nonzero readings or metrics");
  o.note("25 single-pixel stimuli on 5x5, C = 0 and off-pixels 0 V exactly");
  return o;
}

Outcome pitch_trend() {
  Outcome o;
  CharacterizationSetup setup;
  setup.geometry.rows = 3;
  setup.geometry.cols = 3;
  setup.diffusion_sigma = sweep_diffusion;
  const double masses[] = {0.5};
  const double pitches[] = {0.01, 0.02, 0.03, 0.04, 0.05};
  const auto t0 = clock_type::now();
  const auto reports = characterize(setup, masses, pitches, true);
  const double seconds = ms_since(t0) / 1e3;
  std::string means;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    means += (i ? " " : "") + fmt("%.4f", reports[i].stats.mean);
    if (i > 0) o.require(reports[i].stats.mean < reports[i - 1].stats.mean, "not decreasing at index " + std::to_string(i));
  }
  o.require(seconds < sweep_time_limit_s, "runtime");
  o.note("means at 1..5 cm: " + means + " (" + fmt("%.3f", seconds) + " s)");
  return o;
}

Outcome pipeline_invariants() {
  Outcome o;
  std::mt19937_64 rng(0x919E);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int failures = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t rows = 2 + trial % 15;
    const std::size_t cols = 2 + (trial / 15) % 15;
    Frame f(Grid(rows, cols, 0.0), Unit::adc_counts);
    for (double& v : f.values.values()) v = std::floor(unit(rng) * 102300.0);

    const auto sn = square_and_normalize(f);
    if (sn.values.max() != 1.0 || sn.values.min() < 0.0) ++failures;
    for (std::size_t i = 0; i + 1 < f.values.size(); ++i) {
      const double a = f.values.values()[i], b = f.values.values()[i + 1];
      const double sa = sn.values.values()[i], sb = sn.values.values()[i + 1];
      if ((a < b && sa > sb) || (a > b && sa < sb)) ++failures;
    }

    const double sigma = 0.1 + 0.1 * (trial % 20);
    const int radius = static_cast<int>(std::ceil(3 * sigma));
    const auto blurred = gaussian_blur(sn, sigma, radius);
    if (blurred.values.min() < 0.0 || blurred.values.max() > sn.values.max()) ++failures;
    const Frame constant(Grid(rows, cols, unit(rng)), Unit::normalized);
    if (!(gaussian_blur(constant, sigma, radius) == constant)) ++failures;

    const auto bin = adaptive_threshold(blurred);
    const double mean = blurred.values.sum() / static_cast<double>(blurred.values.size());
    const bool flat = blurred.values.min() == blurred.values.max();
    for (std::size_t i = 0; i < bin.values.size(); ++i) {
      const double want = (!flat && blurred.values.values()[i] > mean) ? 1.0 : 0.0;
      if (bin.values.values()[i] != want) ++failures;
    }

    PipelineConfig pc;
    pc.frames_per_capture = 1;
    std::vector<Frame> one{f};
    if (!(run_pipeline(one, pc) == run_pipeline(one, pc))) ++failures;
  }
  o.require(failures == 0, std::to_string(failures) + " property violations");

  // S&N never raises the metric of a simulated single-pixel stimulus.
  std::uniform_real_distribution<double> mass(0.05, 2.0);
  std::uniform_real_distribution<double> diffusion(0.0, 4e-3);
  SensorGeometry g;
  g.rows = 4;
  g.cols = 4;
  ReadoutConfig cfg;
  int worse = 0;
  for (int i = 0; i < suppression_cases; ++i) {
    const PixelIndex at{static_cast<std::size_t>(i % 4), static_cast<std::size_t>((i / 4) % 4)};
    const WeightStimulus w{at, mass(rng), 1e-4};
    const auto field = rasterize_stimulus({}, std::span(&w, 1), g, diffusion(rng)).field;
    const auto raw = scan_frame(g, field, VelostatModel{}, cfg, static_cast<std::uint64_t>(i));
    if (crosstalk_frame(square_and_normalize(raw), at).value > crosstalk_frame(raw, at).value) ++worse;
  }
  o.require(worse == 0, std::to_string(worse) + " stimuli with higher S&N crosstalk");
  o.note("2000 random frames; " + std::to_string(suppression_cases) + " simulated stimuli for suppression");
  return o;
}

Outcome performance() {
  Outcome o;
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> unit(0.0, 1023.0);
  std::vector<Frame> frames;
  for (int i = 0; i < 100; ++i) {
    Frame f(Grid(16, 16, 0.0), Unit::adc_counts);
    for (double& v : f.values.values()) v = std::floor(unit(rng));
    frames.push_back(f);
  }
  PipelineConfig pc;
  const double pipeline_ms = median_ms(21, [&] { (void)run_pipeline(frames, pc); });
  o.require(pipeline_ms < pipeline_time_limit_ms, "pipeline time");

  SessionConfig c;
  const auto stim = test_support::load_stimulus(VELOPAD_TEST_DATA "/stroke_L_4cm.json");
  const auto field = rasterize_stimulus(stim.strokes, stim.weights, c.geometry, c.diffusion_sigma).field;
  const double scan_ms = median_ms(3, [&] { (void)scan_frame(c.geometry, field, c.model, c.readout, 1); });
  o.require(scan_ms / 1e3 < scan_time_limit_s, "scan time");
  o.note("pipeline " + fmt("%.3f", pipeline_ms) + " ms; 16x16 scan, mechanisms on, " + fmt("%.1f", scan_ms) + " ms");
  return o;
}

Outcome wire_protocol() {
  Outcome o;
  std::mt19937_64 rng(0x3A5A);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  std::uniform_int_distribution<int> sample(0, 65535);
  std::uniform_int_distribution<int> byte(0, 255);
  int failures = 0;
  for (int i = 0; i < wire_cases; ++i) {
    Frame f(Grid(i % 50 == 0 ? 255 : dim(rng), dim(rng), 0.0), Unit::adc_counts);
    for (double& v : f.values.values()) v = sample(rng);
    const auto seq = static_cast<std::uint16_t>(sample(rng));
    const auto r = wire::decode_stream(wire::encode(f, seq));
    if (r.frames.size() != 1 || r.frames[0].seq != seq || !(r.frames[0].frame == f) || r.diagnostics.total() != 0) {
      ++failures;
    }
  }
  o.require(failures == 0, std::to_string(failures) + " round-trip failures");

  std::vector<std::vector<std::uint8_t>> parts;
  for (int k = 0; k < 3; ++k) {
    Frame f(Grid(16, 16, 0.0), Unit::adc_counts);
    for (double& v : f.values.values()) v = sample(rng) % 1024;
    parts.push_back(wire::encode(f, static_cast<std::uint16_t>(k)));
  }
  o.require(parts[0].size() == 521, "16x16 length " + std::to_string(parts[0].size()));

  auto corrupted = parts;
  corrupted[1][100] ^= 0x01;
  std::vector<std::uint8_t> stream;
  for (const auto& p : corrupted) stream.insert(stream.end(), p.begin(), p.end());
  auto r = wire::decode_stream(stream);
  o.require(r.frames.size() == 2 && r.frames[0].seq == 0 && r.frames[1].seq == 2 && r.diagnostics.crc_failures == 1,
            "corruption recovery");

  int garbage_failures = 0;
  for (std::size_t j = 1; j < 521; ++j) {
    std::vector<std::uint8_t> s(j);
    for (auto& b : s) b = static_cast<std::uint8_t>(byte(rng));
    for (const auto& p : parts) s.insert(s.end(), p.begin(), p.end());
    r = wire::decode_stream(s);
    if (r.frames.size() != 3 || r.diagnostics.resyncs < 1) ++garbage_failures;
  }
  o.require(garbage_failures == 0, std::to_string(garbage_failures) + " garbage-prefix cases");
  o.note(std::to_string(wire_cases) + " random frames; 520 garbage prefixes; 16x16 = 521 bytes");
  return o;
}

Outcome legibility() {
  Outcome o;
  // Fixed capture configuration shared with the golden log.
  SessionConfig c;
  c.readout.noise_sigma = 5e-3;
  c.seed = 7;
  for (const char* name : {"stroke_L_4cm.json", "stroke_L_1cm.json"}) {
    const std::string path = std::string(VELOPAD_TEST_DATA) + "/" + name;
    const auto result = run_capture({c, test_support::load_stimulus(path), 0});
    const auto mask = test_support::stroke_mask(path, c.geometry);
    const double overlap = test_support::overlap(result.staged.binary, mask);
    const auto comps = test_support::components(result.staged.binary);
    if (std::string(name) == "stroke_L_4cm.json") {
      o.require(overlap >= legibility_overlap, "4 cm overlap");
      o.require(comps == 1, "4 cm components " + std::to_string(comps));
    }
    o.note(std::string(name) + " overlap " + fmt("%.2f", overlap) + ", " + std::to_string(comps) + " component(s), " +
           std::to_string(test_support::count(result.staged.binary.values)) + " set pixels, " +
           fmt("%.2f", test_support::near_fraction(result.staged.binary, mask)) + " of them beside the stroke");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"worked crosstalk example", worked_example},
      {"metric property suite", metric_properties},
      {"neighbourhood census", census},
      {"solver oracle equivalence", solver_oracle},
      {"crosstalk-off oracle", crosstalk_off},
      {"pitch trend", pitch_trend},
      {"pipeline invariants", pipeline_invariants},
      {"desk-scale performance", performance},
      {"wire protocol", wire_protocol},
      {"stroke legibility", legibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2zu %-28s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
