#include "fsrl/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fsrl {

using Eigen::Index;

namespace {

constexpr int kDr[kGridActions] = {-1, 1, 0, 0};
constexpr int kDc[kGridActions] = {0, 0, -1, 1};

bool is_map_char(char c) {
  return c == kWall || c == kFloor || c == kPit || c == kGoal || c == kStart;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) {
    throw std::runtime_error("grid line " + std::to_string(line) + ": bad value for " + key);
  }
  return v;
}

}  // namespace

void GridWorldSpec::validate() const {
  if (rows.empty() || rows.front().empty()) {
    throw std::invalid_argument("grid: empty map");
  }
  std::size_t goals = 0;
  std::size_t starts = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width()) {
      throw std::invalid_argument("grid: row " + std::to_string(r) + " has width " +
                                  std::to_string(rows[r].size()) + ", expected " +
                                  std::to_string(width()));
    }
    for (char c : rows[r]) {
      if (!is_map_char(c)) {
        throw std::invalid_argument(std::string("grid: unknown map character '") + c + "'");
      }
      goals += c == kGoal;
      starts += c == kStart;
    }
  }
  if (goals == 0) throw std::invalid_argument("grid: no goal cell");
  if (starts == 0) throw std::invalid_argument("grid: no start cell");
  if (pit_penalty > 0.0) throw std::invalid_argument("grid: pit_penalty must be <= 0");
  if (!(action_retention >= 0.0 && action_retention <= 1.0)) {
    throw std::invalid_argument("grid: action_retention must lie in [0,1]");
  }
}

GridWorldSpec read_grid(std::istream& in) {
  GridWorldSpec spec;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text.front() == ';') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      spec.rows.push_back(text);
      continue;
    }
    if (!spec.rows.empty()) {
      throw std::runtime_error("grid line " + std::to_string(line) +
                               ": header entries must precede the map");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "pit_penalty") {
      spec.pit_penalty = parse_double(key, value, line);
    } else if (key == "step_reward") {
      spec.step_reward = parse_double(key, value, line);
    } else if (key == "action_retention") {
      spec.action_retention = parse_double(key, value, line);
    } else if (key == "max_steps") {
      spec.max_steps = static_cast<std::size_t>(parse_double(key, value, line));
    } else if (key == "redraw") {
      if (value == "all") {
        spec.redraw = RedrawRule::kAllActions;
      } else if (value == "others") {
        spec.redraw = RedrawRule::kOtherActions;
      } else {
        throw std::runtime_error("grid line " + std::to_string(line) +
                                 ": redraw must be 'all' or 'others'");
      }
    } else {
      throw std::runtime_error("grid line " + std::to_string(line) + ": unknown key " + key);
    }
  }
  spec.validate();
  return spec;
}

void write_grid(std::ostream& out, const GridWorldSpec& spec) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "pit_penalty = " << spec.pit_penalty << '\n'
      << "step_reward = " << spec.step_reward << '\n'
      << "action_retention = " << spec.action_retention << '\n'
      << "redraw = " << (spec.redraw == RedrawRule::kAllActions ? "all" : "others") << '\n'
      << "max_steps = " << spec.max_steps << '\n';
  out.precision(old);
  for (const auto& row : spec.rows) out << row << '\n';
}

GridWorldSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path);
  return read_grid(in);
}

void save_grid(const std::string& path, const GridWorldSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grid file " + path);
  write_grid(out, spec);
}

GridWorldSpec canonical_grid() {
  // A serpentine of corridors joined by one-cell gaps, with the pit row under
  // the last corridor.
  GridWorldSpec spec;
  spec.rows = {
      "S.........",
      "#########.",
      "S.........",
      ".#########",
      "S.........",
      "#########.",
      "S.........",
      ".#########",
      "S........G",
      ".PPPPPPPP.",
  };
  return spec;
}

std::size_t count_pits(const GridWorldSpec& spec) {
  std::size_t n = 0;
  for (const auto& row : spec.rows) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), kPit));
  return n;
}

double return_floor(const GridWorldSpec& spec) {
  return -static_cast<double>(spec.max_steps) * std::abs(spec.step_reward) +
         spec.pit_penalty * static_cast<double>(count_pits(spec));
}

std::size_t GridGeometry::state_at(std::size_t row, std::size_t col) const {
  return state_of_cell.at(row * width + col);
}

GridGeometry grid_geometry(const GridWorldSpec& spec) {
  spec.validate();
  GridGeometry g;
  g.width = spec.width();
  const std::size_t h = spec.height();
  const std::size_t w = spec.width();
  g.state_of_cell.assign(h * w, 0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const char ch = spec.at(r, c);
      if (ch == kWall) continue;
      const std::size_t s = g.cell.size();
      g.state_of_cell[r * w + c] = s;
      g.cell.push_back(r * w + c);
      g.pit.push_back(ch == kPit);
      g.goal.push_back(ch == kGoal);
      if (ch == kStart) g.starts.push_back(s);
    }
  }
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (spec.at(r, c) == kWall) g.state_of_cell[r * w + c] = g.cell.size();
    }
  }
  g.next.resize(g.cell.size());
  for (std::size_t s = 0; s < g.cell.size(); ++s) {
    const long r = static_cast<long>(g.row(s));
    const long c = static_cast<long>(g.col(s));
    for (std::size_t a = 0; a < kGridActions; ++a) {
      const long nr = r + kDr[a];
      const long nc = c + kDc[a];
      const bool inside = nr >= 0 && nc >= 0 && nr < static_cast<long>(h) &&
                          nc < static_cast<long>(w);
      if (inside && spec.at(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)) != kWall) {
        g.next[s][a] = g.state_at(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
      } else {
        g.next[s][a] = s;
      }
    }
  }
  return g;
}

double action_probability(const GridWorldSpec& spec, std::size_t chosen,
                          std::size_t executed) {
  const double keep = spec.action_retention;
  if (spec.redraw == RedrawRule::kAllActions) {
    return (chosen == executed ? keep : 0.0) + (1.0 - keep) / kGridActions;
  }
  return chosen == executed ? keep : (1.0 - keep) / (kGridActions - 1);
}

GridWorld::GridWorld(GridWorldSpec spec, std::uint64_t seed)
    : Environment(seed, spec.max_steps), spec_(std::move(spec)),
      geometry_(grid_geometry(spec_)) {}

double GridWorld::r_max() const {
  return std::abs(spec_.step_reward) + std::abs(spec_.pit_penalty);
}

std::unique_ptr<Environment> GridWorld::clone() const {
  return std::make_unique<GridWorld>(*this);
}

void GridWorld::set_state(std::size_t s) {
  if (s >= geometry_.n_states()) throw std::invalid_argument("GridWorld: state out of range");
  state_ = s;
}

Observation GridWorld::do_reset() {
  state_ = geometry_.starts[uniform_index(rng(), geometry_.starts.size())];
  Observation o;
  o.state = state_;
  return o;
}

StepOutcome GridWorld::do_step(std::size_t action) {
  std::size_t executed = action;
  if (uniform01(rng()) >= spec_.action_retention) {
    if (spec_.redraw == RedrawRule::kAllActions) {
      executed = uniform_index(rng(), kGridActions);
    } else {
      executed = uniform_index(rng(), kGridActions - 1);
      if (executed >= action) ++executed;
    }
  }
  state_ = geometry_.next[state_][executed];
  StepOutcome out;
  out.reward = spec_.step_reward + (geometry_.pit[state_] ? spec_.pit_penalty : 0.0);
  out.next.state = state_;
  out.terminal = geometry_.goal[state_];
  return out;
}

TabularMDP gridworld_to_tabular(const GridWorldSpec& spec) {
  const GridGeometry g = grid_geometry(spec);
  const Index n = static_cast<Index>(g.n_states());
  Eigen::MatrixXd rewards = Eigen::MatrixXd::Zero(n, kGridActions);
  std::vector<Eigen::MatrixXd> transitions(kGridActions, Eigen::MatrixXd::Zero(n, n));
  std::vector<std::size_t> terminals;
  for (std::size_t s = 0; s < g.n_states(); ++s) {
    const Index si = static_cast<Index>(s);
    if (g.goal[s]) {
      for (auto& t : transitions) t(si, si) = 1.0;
      terminals.push_back(s);
      continue;
    }
    for (std::size_t a = 0; a < kGridActions; ++a) {
      double reward = 0.0;
      for (std::size_t e = 0; e < kGridActions; ++e) {
        const double p = action_probability(spec, a, e);
        const std::size_t to = g.next[s][e];
        transitions[a](si, static_cast<Index>(to)) += p;
        reward += p * (spec.step_reward + (g.pit[to] ? spec.pit_penalty : 0.0));
      }
      rewards(si, static_cast<Index>(a)) = reward;
    }
  }
  const double r_max = std::abs(spec.step_reward) + std::abs(spec.pit_penalty);
  TabularMDP mdp(std::move(rewards), std::move(transitions), 1.0, r_max, std::move(terminals));
  if (!is_episodic(mdp)) {
    std::cerr << "warning: some grid cells cannot reach a goal\n";
  }
  return mdp;
}

Calibration calibrate_pit_penalty(const GridWorldSpec& spec, double target_delta,
                                  double tol, double min_penalty) {
  if (!(tol > 0.0)) throw std::invalid_argument("calibrate_pit_penalty: tol must be positive");
  if (!(min_penalty < 0.0)) {
    throw std::invalid_argument("calibrate_pit_penalty: min_penalty must be negative");
  }
  GridWorldSpec s = spec;
  auto delta_at = [&s](double penalty) {
    s.pit_penalty = penalty;
    return price_of_inertia(gridworld_to_tabular(s)).value;
  };
  double hi = 0.0;  // smaller |penalty|, smaller delta
  double lo = min_penalty;
  const double d_hi = delta_at(hi);
  const double d_lo = delta_at(lo);
  Calibration out;
  if (std::abs(d_hi - target_delta) <= tol) return {hi, d_hi, 0};
  if (target_delta < d_hi || target_delta > d_lo) {
    std::ostringstream msg;
    msg << "calibrate_pit_penalty: target " << target_delta << " not bracketed; delta("
        << hi << ") = " << d_hi << ", delta(" << lo << ") = " << d_lo;
    throw std::runtime_error(msg.str());
  }
  for (std::size_t it = 1; it <= 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = delta_at(mid);
    out = {mid, d, it};
    if (std::abs(d - target_delta) <= tol) return out;
    if (d < target_delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw std::runtime_error("calibrate_pit_penalty: bisection did not reach tolerance");
}

}  // namespace fsrl
