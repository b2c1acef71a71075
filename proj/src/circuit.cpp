#include "velopad/circuit.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace velopad {

void VelostatModel::validate() const {
  if (!(r_on > 0.0) || !(r_off > r_on)) throw std::invalid_argument("velostat model needs r_off > r_on > 0");
  if (!(p_half > 0.0)) throw std::invalid_argument("p_half must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(r_sheet > 0.0)) throw std::invalid_argument("sheet resistance must be positive or disabled");
  if (!(sheet_reference_pitch > 0.0)) throw std::invalid_argument("sheet reference pitch must be positive");
}

void ReadoutConfig::validate() const {
  if (!(v_dd > 0.0)) throw std::invalid_argument("v_dd must be positive");
  if (!(r_bias > 0.0)) throw std::invalid_argument("bias resistance must be positive");
  if (adc_bits < 1 || adc_bits > 16) throw std::invalid_argument("adc bits must be in [1, 16]");
  if (frames_per_capture < 1) throw std::invalid_argument("frames per capture must be at least 1");
  if (!(frame_period > 0.0)) throw std::invalid_argument("frame period must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
}

double velostat_resistance(double pressure, const VelostatModel& model) {
  if (!(pressure >= 0.0)) throw std::invalid_argument("pressure must be nonnegative");
  const double ratio = std::pow(pressure / model.p_half, model.gamma);
  return model.r_on + (model.r_off - model.r_on) / (1.0 + ratio);
}

double pixel_resistance(double pressure, const VelostatModel& model, const Mechanisms& mechanisms) {
  if (!mechanisms.finite_off && pressure == 0.0) return open_circuit;
  return velostat_resistance(pressure, model);
}

ResistorNetwork::ResistorNetwork(std::size_t rows, std::size_t cols, bool with_junctions)
    : rows_(rows), cols_(cols), with_junctions_(with_junctions), pixels_(rows * cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) pixels_[r * cols + c].at = {r, c};
  }
}

std::size_t ResistorNetwork::node_count() const {
  return rows_ + cols_ + (with_junctions_ ? rows_ * cols_ : 0);
}

std::size_t ResistorNetwork::junction_node(std::size_t r, std::size_t c) const {
  if (!with_junctions_) throw std::logic_error("network has no junction nodes");
  return rows_ + cols_ + r * cols_ + c;
}

std::size_t ResistorNetwork::conducting_branch_count() const {
  auto finite = [](double r) { return std::isfinite(r); };
  std::size_t n = 0;
  for (const auto& p : pixels_) n += finite(p.resistance) ? 1 : 0;
  for (const auto& l : laterals_) n += finite(l.resistance) ? 1 : 0;
  return n;
}

ResistorNetwork build_network(const SensorGeometry& geometry, const PressureField& field,
                              const VelostatModel& model, const Mechanisms& mechanisms) {
  geometry.validate();
  model.validate();
  if (field.values.rows() != geometry.rows || field.values.cols() != geometry.cols) {
    throw std::invalid_argument("pressure field does not match the geometry");
  }

  const bool sheet = mechanisms.sheet_paths && std::isfinite(model.r_sheet);
  ResistorNetwork net(geometry.rows, geometry.cols, sheet);
  for (std::size_t r = 0; r < geometry.rows; ++r) {
    for (std::size_t c = 0; c < geometry.cols; ++c) {
      net.pixel(r, c).resistance = pixel_resistance(field.values(r, c), model, mechanisms);
    }
  }
  if (sheet) {
    // Lateral film resistance grows linearly with the gap between crossovers.
    const double lateral = model.r_sheet * geometry.pitch / model.sheet_reference_pitch;
    for (std::size_t r = 0; r < geometry.rows; ++r) {
      for (std::size_t c = 0; c < geometry.cols; ++c) {
        if (c + 1 < geometry.cols) {
          net.add_lateral({net.junction_node(r, c), net.junction_node(r, c + 1), lateral});
        }
        if (r + 1 < geometry.rows) {
          net.add_lateral({net.junction_node(r, c), net.junction_node(r + 1, c), lateral});
        }
      }
    }
  }
  return net;
}

namespace {

struct Conductance {
  std::size_t a;
  std::size_t b;
  double g;
  double ohms;
};

std::vector<Conductance> conductances(const ResistorNetwork& net) {
  std::vector<Conductance> out;
  out.reserve(net.pixels().size() * 2 + net.laterals().size());
  for (const auto& p : net.pixels()) {
    if (!std::isfinite(p.resistance)) continue;
    const std::size_t row = net.row_node(p.at.row);
    const std::size_t col = net.col_node(p.at.col);
    if (net.has_junctions()) {
      const std::size_t j = net.junction_node(p.at.row, p.at.col);
      out.push_back({row, j, 2.0 / p.resistance, p.resistance / 2.0});
      out.push_back({j, col, 2.0 / p.resistance, p.resistance / 2.0});
    } else {
      out.push_back({row, col, 1.0 / p.resistance, p.resistance});
    }
  }
  for (const auto& l : net.laterals()) {
    if (std::isfinite(l.resistance)) out.push_back({l.a, l.b, 1.0 / l.resistance, l.resistance});
  }
  return out;
}

}  // namespace

double read_pixel(const ResistorNetwork& net, PixelIndex selected, const ReadoutConfig& config) {
  if (selected.row >= net.rows() || selected.col >= net.cols()) {
    throw OutOfBoundsError("selected pixel outside the network");
  }
  const std::size_t n = net.node_count();
  const std::size_t drive = net.row_node(selected.row);
  const std::size_t sense = net.col_node(selected.col);

  // Fixed potentials: the driven row, plus every other electrode when the
  // grounding mitigation is on.
  std::vector<char> fixed(n, 0);
  std::vector<double> potential(n, 0.0);
  fixed[drive] = 1;
  potential[drive] = config.v_dd;
  if (config.ground_unselected) {
    for (std::size_t r = 0; r < net.rows(); ++r) {
      if (net.row_node(r) != drive) fixed[net.row_node(r)] = 1;
    }
    for (std::size_t c = 0; c < net.cols(); ++c) {
      if (net.col_node(c) != sense) fixed[net.col_node(c)] = 1;
    }
  }

  const auto branches = conductances(net);

  // Unknowns: free nodes in the component(s) reachable from the sense node
  // without passing through a fixed node.
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(n);
  for (const auto& b : branches) {
    adjacency[b.a].push_back({b.b, b.g});
    adjacency[b.b].push_back({b.a, b.g});
  }
  std::vector<long> index(n, -1);
  std::vector<std::size_t> order;
  std::vector<std::size_t> stack{sense};
  index[sense] = 0;
  order.push_back(sense);
  bool touches_drive = false;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& [w, g] : adjacency[v]) {
      if (fixed[w]) {
        touches_drive = touches_drive || w == drive;
        continue;
      }
      if (index[w] < 0) {
        index[w] = static_cast<long>(order.size());
        order.push_back(w);
        stack.push_back(w);
      }
    }
  }
  if (!touches_drive) return 0.0;

  // A lone branch straight into the bias resistor is a plain divider.
  if (order.size() == 1) {
    const Conductance* only = nullptr;
    std::size_t count = 0;
    for (const auto& b : branches) {
      if (b.a == sense || b.b == sense) {
        only = &b;
        ++count;
      }
    }
    if (count == 1) return config.v_dd * config.r_bias / (config.r_bias + only->ohms);
  }

  const auto m = static_cast<int>(order.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  triplets.push_back({0, 0, 1.0 / config.r_bias});
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t v = order[k];
    const auto row = static_cast<int>(k);
    for (const auto& [w, g] : adjacency[v]) {
      triplets.push_back({row, row, g});
      if (fixed[w]) {
        rhs[row] += g * potential[w];
      } else {
        triplets.push_back({row, static_cast<int>(index[w]), -g});
      }
    }
  }
  Eigen::SparseMatrix<double> laplacian(m, m);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
  if (solver.info() != Eigen::Success) return 0.0;
  const Eigen::VectorXd v = solver.solve(rhs);
  return std::clamp(v[0], 0.0, config.v_dd);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double noise_sample(std::uint64_t seed, std::uint64_t frame, std::size_t row, std::size_t col,
                    double sigma) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ frame);
  key = splitmix64(key ^ (static_cast<std::uint64_t>(row) << 32 | static_cast<std::uint64_t>(col)));
  std::mt19937_64 engine(key);
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(engine);
}

Frame add_noise(const Frame& clean, const ReadoutConfig& config, std::uint64_t seed,
                std::uint64_t frame) {
  Frame out = clean;
  if (config.noise_sigma == 0.0) return out;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double v = out(r, c) + noise_sample(seed, frame, r, c, config.noise_sigma);
      out(r, c) = std::clamp(v, 0.0, config.v_dd);
    }
  }
  return out;
}

// With every unselected line floating, the network seen from the selected
// row and column is a two-terminal resistor, so one factorization of the
// grounded Laplacian gives all readings through effective resistances
// R_ab = X_aa + X_bb - 2 X_ab.
Frame floating_scan(const ResistorNetwork& net, const ReadoutConfig& config) {
  const std::size_t n = net.node_count();
  const auto branches = conductances(net);

  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& b : branches) parent[find(b.a)] = find(b.b);

  std::vector<std::size_t> component(n);
  std::vector<std::size_t> branch_count(n, 0);
  std::vector<const Conductance*> last_branch(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) component[i] = find(i);
  for (const auto& b : branches) {
    ++branch_count[component[b.a]];
    last_branch[component[b.a]] = &b;
  }

  // the root of each component is its ground; everything else is an unknown
  std::vector<long> index(n, -1);
  int m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (component[i] != i) index[i] = m++;
  }

  Frame frame(Grid(net.rows(), net.cols(), 0.0), Unit::volts);
  if (m == 0) return frame;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(branches.size() * 4);
  for (const auto& b : branches) {
    const long ia = index[b.a];
    const long ib = index[b.b];
    if (ia >= 0) triplets.push_back({static_cast<int>(ia), static_cast<int>(ia), b.g});
    if (ib >= 0) triplets.push_back({static_cast<int>(ib), static_cast<int>(ib), b.g});
    if (ia >= 0 && ib >= 0) {
      triplets.push_back({static_cast<int>(ia), static_cast<int>(ib), -b.g});
      triplets.push_back({static_cast<int>(ib), static_cast<int>(ia), -b.g});
    }
  }
  Eigen::SparseMatrix<double> laplacian(m, m);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
  if (solver.info() != Eigen::Success) throw std::runtime_error("network factorization failed");

  // columns of X for the electrode nodes only
  const std::size_t electrodes = net.rows() + net.cols();
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(electrodes));
  for (std::size_t e = 0; e < electrodes; ++e) {
    if (index[e] >= 0) unit(index[e], static_cast<Eigen::Index>(e)) = 1.0;
  }
  const Eigen::MatrixXd x = solver.solve(unit);
  auto entry = [&](std::size_t a, std::size_t b) {
    return index[a] < 0 || index[b] < 0 ? 0.0 : x(index[a], static_cast<Eigen::Index>(b));
  };

  for (std::size_t r = 0; r < net.rows(); ++r) {
    const std::size_t a = net.row_node(r);
    for (std::size_t c = 0; c < net.cols(); ++c) {
      const std::size_t b = net.col_node(c);
      if (component[a] != component[b]) continue;
      const double ohms = branch_count[component[a]] == 1
                              ? last_branch[component[a]]->ohms
                              : entry(a, a) + entry(b, b) - entry(a, b) - entry(b, a);
      frame(r, c) = std::clamp(config.v_dd * config.r_bias / (config.r_bias + ohms), 0.0, config.v_dd);
    }
  }
  return frame;
}

Frame clean_scan(const SensorGeometry& geometry, const PressureField& field,
                 const VelostatModel& model, const ReadoutConfig& config) {
  config.validate();
  const ResistorNetwork net = build_network(geometry, field, model, config.mechanisms);
  if (!config.ground_unselected) return floating_scan(net, config);
  Frame frame(Grid(geometry.rows, geometry.cols, 0.0), Unit::volts);
  for (std::size_t r = 0; r < geometry.rows; ++r) {
    for (std::size_t c = 0; c < geometry.cols; ++c) frame(r, c) = read_pixel(net, {r, c}, config);
  }
  return frame;
}

}  // namespace

Frame scan_frame(const SensorGeometry& geometry, const PressureField& field,
                 const VelostatModel& model, const ReadoutConfig& config, std::uint64_t seed,
                 std::uint64_t frame_index) {
  return add_noise(clean_scan(geometry, field, model, config), config, seed, frame_index);
}

std::vector<Frame> capture_frames(const SensorGeometry& geometry, const PressureField& field,
                                  const VelostatModel& model, const ReadoutConfig& config,
                                  std::uint64_t seed, std::uint64_t first_frame) {
  const Frame clean = clean_scan(geometry, field, model, config);
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(config.frames_per_capture));
  for (int k = 0; k < config.frames_per_capture; ++k) {
    frames.push_back(add_noise(clean, config, seed, first_frame + static_cast<std::uint64_t>(k)));
  }
  return frames;
}

Frame adc_quantize(const Frame& volts, const ReadoutConfig& config) {
  if (volts.unit != Unit::volts) throw std::invalid_argument("adc_quantize expects a volts frame");
  const double full_scale = static_cast<double>(config.adc_full_scale());
  Frame out(volts.values, Unit::adc_counts);
  for (double& v : out.values.values()) {
    v = std::floor(std::clamp(v, 0.0, config.v_dd) / config.v_dd * full_scale + 0.5);
  }
  return out;
}

}  // namespace velopad
