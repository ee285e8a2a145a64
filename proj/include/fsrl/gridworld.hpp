#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsrl/environment.hpp"
#include "fsrl/tabular.hpp"

namespace fsrl {

// Map characters.
inline constexpr char kWall = '#';
inline constexpr char kFloor = '.';
inline constexpr char kPit = 'P';
inline constexpr char kGoal = 'G';
inline constexpr char kStart = 'S';

enum GridAction : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::size_t kGridActions = 4;

// How a discarded action is replaced.
enum class RedrawRule {
  kAllActions,   // uniform over all four, possibly the chosen one again
  kOtherActions  // uniform over the three others
};

struct GridWorldSpec {
  std::vector<std::string> rows;  // one string per row, all of equal width
  double pit_penalty = 0.0;       // added to step_reward when a step ends in a pit
  double step_reward = -1.0;
  double action_retention = 0.85;
  RedrawRule redraw = RedrawRule::kAllActions;
  std::size_t max_steps = 1000;  // episode cap for simulation; 0 disables

  std::size_t height() const { return rows.size(); }
  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
  char at(std::size_t row, std::size_t col) const { return rows[row][col]; }

  // Throws std::invalid_argument naming the problem.
  void validate() const;
};

// Text map: `key = value` header lines (pit_penalty, step_reward,
// action_retention, redraw = all|others, max_steps), then one line per map
// row. Lines starting with ';' are comments.
GridWorldSpec read_grid(std::istream& in);
void write_grid(std::ostream& out, const GridWorldSpec& spec);
GridWorldSpec load_grid(const std::string& path);
void save_grid(const std::string& path, const GridWorldSpec& spec);

// The 10x10 layout shipped with the repository (pit penalty 0).
GridWorldSpec canonical_grid();

std::size_t count_pits(const GridWorldSpec& spec);
// Nominal worst episode return: max_steps step rewards plus one penalty per
// pit cell. Agents that revisit pits can fall below it.
double return_floor(const GridWorldSpec& spec);

// Non-wall cells indexed row-major, with deterministic successors.
struct GridGeometry {
  std::size_t width = 0;
  std::vector<std::size_t> cell;         // state -> row * width + col
  std::vector<std::array<std::size_t, kGridActions>> next;  // blocked moves stay
  std::vector<bool> pit;
  std::vector<bool> goal;
  std::vector<std::size_t> starts;

  std::size_t n_states() const { return cell.size(); }
  std::size_t row(std::size_t s) const { return cell[s] / width; }
  std::size_t col(std::size_t s) const { return cell[s] % width; }
  // State index of a cell, or n_states() for walls.
  std::size_t state_at(std::size_t row, std::size_t col) const;

  std::vector<std::size_t> state_of_cell;  // row * width + col -> state
};
GridGeometry grid_geometry(const GridWorldSpec& spec);

// Probability that `chosen` is executed as `executed`.
double action_probability(const GridWorldSpec& spec, std::size_t chosen,
                          std::size_t executed);

class GridWorld : public Environment {
 public:
  explicit GridWorld(GridWorldSpec spec, std::uint64_t seed = 0);

  std::size_t n_actions() const override { return kGridActions; }
  std::size_t n_features() const override { return 0; }
  std::size_t n_states() const override { return geometry_.n_states(); }
  double r_max() const override;
  std::unique_ptr<Environment> clone() const override;

  const GridWorldSpec& spec() const { return spec_; }
  const GridGeometry& geometry() const { return geometry_; }
  std::size_t state() const { return state_; }
  void set_state(std::size_t s);

 protected:
  Observation do_reset() override;
  StepOutcome do_step(std::size_t action) override;

 private:
  GridWorldSpec spec_;
  GridGeometry geometry_;
  std::size_t state_ = 0;
};

// Exact model of GridWorld: undiscounted, goals absorbing. Logs a warning to
// stderr when some state cannot reach a goal.
TabularMDP gridworld_to_tabular(const GridWorldSpec& spec);

struct Calibration {
  double pit_penalty = 0.0;
  double delta = 0.0;  // price of inertia at that penalty
  std::size_t iterations = 0;
};

// Bisection on pit_penalty in [min_penalty, 0] until the price of inertia is
// within tol of target. Throws std::runtime_error, quoting the endpoint
// values, when the target is not bracketed.
Calibration calibrate_pit_penalty(const GridWorldSpec& spec, double target_delta,
                                  double tol = 1e-3, double min_penalty = -1000.0);

}  // namespace fsrl
