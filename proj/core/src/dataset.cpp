#include "cnode/dataset.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "cnode/errors.hpp"
#include "cnode/penalty.hpp"
#include "cnode/rng.hpp"

namespace cnode {
namespace {

double param(const SystemSpec& spec, const std::string& key) {
  const auto it = spec.params.find(key);
  if (it == spec.params.end()) {
    throw ConfigError("system '" + to_string(spec.system) + "' is missing parameter '" + key + "'");
  }
  if (!std::isfinite(it->second)) throw ConfigError("parameter '" + key + "' is not finite");
  return it->second;
}

double parse_real(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("cannot parse number '" + std::string(s) + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string to_string(SystemKind system) {
  switch (system) {
    case SystemKind::kWpg:
      return "wpg";
    case SystemKind::kCr:
      return "cr";
    case SystemKind::kDho:
      return "dho";
  }
  return "?";
}

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kReconstruction:
      return "reconstruction";
    case TaskKind::kExtrapolation:
      return "extrapolation";
    case TaskKind::kCompletion:
      return "completion";
  }
  return "?";
}

SystemKind parse_system(const std::string& name) {
  if (name == "wpg") return SystemKind::kWpg;
  if (name == "cr") return SystemKind::kCr;
  if (name == "dho") return SystemKind::kDho;
  throw ConfigError("unknown system '" + name + "' (valid systems: wpg, cr, dho)");
}

TaskKind parse_task(const std::string& name) {
  if (name == "reconstruction") return TaskKind::kReconstruction;
  if (name == "extrapolation") return TaskKind::kExtrapolation;
  if (name == "completion") return TaskKind::kCompletion;
  throw ConfigError("unknown task '" + name +
                    "' (valid tasks: reconstruction, extrapolation, completion)");
}

std::size_t state_dim(SystemKind system) { return state_names(system).size(); }

std::vector<std::string> state_names(SystemKind system) {
  switch (system) {
    case SystemKind::kWpg:
      return {"p"};
    case SystemKind::kCr:
      return {"m_A", "m_B", "m_C", "m_D"};
    case SystemKind::kDho:
      return {"x", "v"};
  }
  return {};
}

SystemSpec SystemSpec::defaults(SystemKind system) {
  SystemSpec spec;
  spec.system = system;
  const Window train = TaskSpec::defaults(system, TaskKind::kReconstruction).train;
  spec.t_start = train.t_start;
  spec.t_end = train.t_end;
  spec.n_points = train.n_points;
  switch (system) {
    case SystemKind::kWpg:
      spec.params = {{"r", 0.025}, {"K", 12.0}};
      spec.y0 = {0.5};
      break;
    case SystemKind::kCr:
      spec.params = {{"k1", 0.08}, {"k2", 0.04}, {"k3", 0.02}, {"m_total", 1.0}};
      spec.y0 = {1.0, 0.0, 0.0, 0.0};
      break;
    case SystemKind::kDho:
      spec.params = {{"m", 1.0}, {"k", 1.0}, {"c", 0.1}};
      spec.y0 = {1.0, 0.0};
      break;
  }
  return spec;
}

void SystemSpec::validate() const {
  if (n_points < 2) throw ConfigError("a dataset needs at least two points");
  if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
    throw ConfigError("time span must be finite and increasing");
  }
  if (y0.size() != state_dim(system)) {
    throw ConfigError("initial state for '" + to_string(system) + "' must have " +
                      std::to_string(state_dim(system)) + " components");
  }
  for (double v : y0) {
    if (!std::isfinite(v)) throw ConfigError("initial state is not finite");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  switch (system) {
    case SystemKind::kWpg:
      if (!(param(*this, "r") > 0.0)) throw ConfigError("wpg: r must be > 0");
      if (!(param(*this, "K") > 0.0)) throw ConfigError("wpg: K must be > 0");
      if (!(y0[0] > 0.0)) throw ConfigError("wpg: p0 must be > 0");
      break;
    case SystemKind::kCr: {
      for (const char* k : {"k1", "k2", "k3"}) {
        if (!(param(*this, k) >= 0.0)) throw ConfigError(std::string("cr: ") + k + " must be >= 0");
      }
      const double total = param(*this, "m_total");
      if (!(total > 0.0)) throw ConfigError("cr: m_total must be > 0");
      const double sum = y0[0] + y0[1] + y0[2] + y0[3];
      if (std::abs(sum - total) > 1e-12 * total) {
        throw ConfigError("cr: initial masses must sum to m_total");
      }
      break;
    }
    case SystemKind::kDho:
      if (!(param(*this, "m") > 0.0)) throw ConfigError("dho: m must be > 0");
      if (!(param(*this, "k") >= 0.0)) throw ConfigError("dho: k must be >= 0");
      if (!(param(*this, "c") >= 0.0)) throw ConfigError("dho: c must be >= 0");
      break;
  }
}

TaskSpec TaskSpec::defaults(SystemKind system, TaskKind task) {
  double span = 0.0;
  double extended = 0.0;
  std::size_t n_train = 0;
  std::size_t n_extrapolate = 0;
  std::size_t n_complete = 0;
  switch (system) {
    case SystemKind::kWpg:
      span = 300.0, extended = 400.0, n_train = 200, n_extrapolate = 200, n_complete = 300;
      break;
    case SystemKind::kCr:
      span = 100.0, extended = 200.0, n_train = 100, n_extrapolate = 100, n_complete = 200;
      break;
    case SystemKind::kDho:
      span = 50.0, extended = 400.0, n_train = 400, n_extrapolate = 400, n_complete = 600;
      break;
  }
  TaskSpec spec;
  spec.kind = task;
  spec.train = {0.0, span, n_train};
  switch (task) {
    case TaskKind::kReconstruction:
      spec.test = spec.train;
      break;
    case TaskKind::kExtrapolation:
      spec.test = {0.0, extended, n_extrapolate};
      break;
    case TaskKind::kCompletion:
      spec.test = {0.0, span, n_complete};
      break;
  }
  return spec;
}

void TaskSpec::validate() const {
  for (const Window* w : {&train, &test}) {
    if (w->n_points < 2 || !(w->t_end > w->t_start)) {
      throw ConfigError("task windows need >= 2 points and an increasing span");
    }
  }
  switch (kind) {
    case TaskKind::kReconstruction:
      if (!(train == test)) throw ConfigError("reconstruction requires identical train and test");
      break;
    case TaskKind::kExtrapolation:
      if (test.t_start > train.t_start || !(test.t_end > train.t_end)) {
        throw ConfigError("extrapolation test span must contain the train span and end later");
      }
      break;
    case TaskKind::kCompletion:
      if (test.t_start != train.t_start || test.t_end != train.t_end) {
        throw ConfigError("completion requires the same span for train and test");
      }
      if (!(test.n_points > train.n_points)) {
        throw ConfigError("completion requires more test points than train points");
      }
      break;
  }
}

Trajectory generate(const SystemSpec& spec) {
  spec.validate();
  auto rhs = [&spec]() -> std::function<std::vector<double>(std::span<const double>)> {
    switch (spec.system) {
      case SystemKind::kWpg: {
        const double r = param(spec, "r");
        const double capacity = param(spec, "K");
        return [r, capacity](std::span<const double> y) {
          return std::vector<double>{r * y[0] * (1.0 - y[0] / capacity)};
        };
      }
      case SystemKind::kCr: {
        const double k1 = param(spec, "k1");
        const double k2 = param(spec, "k2");
        const double k3 = param(spec, "k3");
        return [k1, k2, k3](std::span<const double> y) {
          return std::vector<double>{-k1 * y[0], k1 * y[0] - k2 * y[1], k2 * y[1] - k3 * y[2],
                                     k3 * y[2]};
        };
      }
      case SystemKind::kDho: {
        const double m = param(spec, "m");
        const double k = param(spec, "k");
        const double c = param(spec, "c");
        return [m, k, c](std::span<const double> y) {
          return std::vector<double>{y[1], -(k / m) * y[0] - (c / m) * y[1]};
        };
      }
    }
    throw ConfigError("unknown system");
  }();

  const TimeGrid grid = TimeGrid::uniform(spec.t_start, spec.t_end, spec.n_points);
  Trajectory traj = ode_solve<double>(rhs, spec.y0, grid, {SolverMethod::kRk4, 10});
  traj.kind = TrajectoryKind::kGroundTruth;
  if (spec.noise_sigma > 0.0) {
    Prng rng(spec.noise_seed);
    for (auto& state : traj.states) {
      for (double& v : state) v += spec.noise_sigma * rng.normal();
    }
  }
  return traj;
}

std::pair<Trajectory, Trajectory> make_task(const SystemSpec& base, const TaskSpec& task) {
  task.validate();
  if (task.train.t_start != base.t_start || task.test.t_start != base.t_start) {
    throw ConfigError("task windows must start at the system's initial time");
  }
  SystemSpec train_spec = base;
  train_spec.t_end = task.train.t_end;
  train_spec.n_points = task.train.n_points;
  Trajectory train = generate(train_spec);
  if (task.kind == TaskKind::kReconstruction) return {train, train};

  SystemSpec test_spec = base;
  test_spec.t_end = task.test.t_end;
  test_spec.n_points = task.test.n_points;
  test_spec.noise_seed = base.noise_seed + 1;
  return {std::move(train), generate(test_spec)};
}

void write_dataset_csv(std::ostream& out, const SystemSpec& spec, const Trajectory& traj) {
  traj.validate();
  const auto names = state_names(spec.system);
  if (traj.dim() != names.size()) throw ShapeError("trajectory does not match the system");
  out << "# cnode-dataset v1 system=" << to_string(spec.system) << " params=";
  bool first = true;
  for (const auto& [k, v] : spec.params) {
    out << (first ? "" : ";") << k << '=' << format_real(v);
    first = false;
  }
  if (spec.noise_sigma > 0.0) out << (first ? "" : ";") << "noise_sigma=" << format_real(spec.noise_sigma);
  out << '\n' << 't';
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_real(traj.grid[i]);
    for (double v : traj.states[i]) out << ',' << format_real(v);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string meta;
  if (!std::getline(in, meta) || meta.rfind("# cnode-dataset v1 ", 0) != 0) {
    throw ConfigError("missing '# cnode-dataset v1' metadata line");
  }
  Dataset ds;
  std::istringstream ms(meta.substr(std::string("# cnode-dataset v1 ").size()));
  std::string field;
  while (ms >> field) {
    if (field.rfind("system=", 0) == 0) {
      ds.system = parse_system(field.substr(7));
    } else if (field.rfind("params=", 0) == 0) {
      const std::string body = field.substr(7);
      if (body.empty()) continue;
      for (const auto& kv : split(body, ';')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("bad params entry '" + kv + "'");
        ds.params[kv.substr(0, eq)] = parse_real(kv.substr(eq + 1));
      }
    }
  }

  std::string header;
  if (!std::getline(in, header)) throw ConfigError("dataset has no header row");
  ds.columns = split(header, ',');
  if (ds.columns.empty() || ds.columns.front() != "t") {
    throw ConfigError("dataset header must start with 't'");
  }
  const std::size_t dim = ds.columns.size() - 1;

  std::vector<double> times;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != dim + 1) throw ConfigError("dataset row has the wrong number of columns");
    times.push_back(parse_real(cells[0]));
    std::vector<double> state;
    state.reserve(dim);
    for (std::size_t d = 1; d <= dim; ++d) state.push_back(parse_real(cells[d]));
    ds.trajectory.states.push_back(std::move(state));
  }
  ds.trajectory.grid = TimeGrid(std::move(times));
  ds.trajectory.kind = TrajectoryKind::kGroundTruth;
  ds.trajectory.validate();
  return ds;
}

}  // namespace cnode
