#include "fsrl/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fsrl {
namespace {

using Eigen::Index;

// Yields non-empty lines with comments stripped.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("model parse error at line " + std::to_string(line_no_) +
                             ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

void read_row(LineReader& reader, std::size_t n, double& reward,
              Eigen::RowVectorXd& row) {
  row.resize(static_cast<Index>(n));
  std::istringstream ss;
  if (!reader.next(ss)) reader.fail("unexpected end of input");
  if (!(ss >> reward)) reader.fail("expected reward");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(ss >> row(static_cast<Index>(j)))) reader.fail("expected transition probability");
  }
  std::string extra;
  if (ss >> extra) reader.fail("trailing token '" + extra + "'");
}

void write_row(std::ostream& out, double reward, const Eigen::RowVectorXd& row) {
  out << reward;
  for (Index j = 0; j < row.size(); ++j) out << ' ' << row(j);
  out << '\n';
}

}  // namespace

TabularMDP read_mdp(std::istream& in) {
  LineReader reader(in);
  std::istringstream ss;
  if (!reader.next(ss)) reader.fail("missing header");
  std::string tag;
  std::size_t n = 0, k = 0;
  double gamma = 0.0, r_max = 0.0;
  if (!(ss >> tag >> n >> k >> gamma >> r_max) || tag != "mdp") {
    reader.fail("expected 'mdp n_states n_actions gamma r_max'");
  }
  if (n == 0 || k == 0) reader.fail("n_states and n_actions must be positive");

  std::vector<std::size_t> terminals;
  Eigen::MatrixXd rewards(static_cast<Index>(n), static_cast<Index>(k));
  std::vector<Eigen::MatrixXd> transitions(k, Eigen::MatrixXd(static_cast<Index>(n),
                                                              static_cast<Index>(n)));
  std::size_t rows_read = 0;
  while (rows_read < n * k) {
    if (!reader.next(ss)) reader.fail("unexpected end of input");
    std::string first;
    ss >> first;
    if (first == "terminal") {
      std::size_t s;
      while (ss >> s) terminals.push_back(s);
      continue;
    }
    const std::size_t s = rows_read / k, a = rows_read % k;
    double reward = 0.0;
    try {
      reward = std::stod(first);
    } catch (const std::exception&) {
      reader.fail("expected reward, got '" + first + "'");
    }
    rewards(static_cast<Index>(s), static_cast<Index>(a)) = reward;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(ss >> transitions[a](static_cast<Index>(s), static_cast<Index>(j)))) {
        reader.fail("expected transition probability");
      }
    }
    std::string extra;
    if (ss >> extra) reader.fail("trailing token '" + extra + "'");
    ++rows_read;
  }
  return TabularMDP(std::move(rewards), std::move(transitions), gamma, r_max,
                    std::move(terminals));
}

void write_mdp(std::ostream& out, const TabularMDP& mdp) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mdp " << mdp.n_states() << ' ' << mdp.n_actions() << ' ' << mdp.gamma()
      << ' ' << mdp.r_max() << '\n';
  if (!mdp.terminal_states().empty()) {
    out << "terminal";
    for (std::size_t s : mdp.terminal_states()) out << ' ' << s;
    out << '\n';
  }
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    out << "# state " << s << '\n';
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      write_row(out, mdp.rewards()(static_cast<Index>(s), static_cast<Index>(a)),
                mdp.transitions(a).row(static_cast<Index>(s)));
    }
  }
  out.flags(flags);
  out.precision(precision);
}

TabularMDP load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return read_mdp(in);
}

void save_mdp(const std::string& path, const TabularMDP& mdp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  write_mdp(out, mdp);
}

TabularMRP read_mrp(std::istream& in) {
  LineReader reader(in);
  std::istringstream ss;
  if (!reader.next(ss)) reader.fail("missing header");
  std::string tag;
  std::size_t n = 0;
  double gamma = 0.0, r_max = 0.0;
  if (!(ss >> tag >> n >> gamma >> r_max) || tag != "mrp") {
    reader.fail("expected 'mrp n_states gamma r_max'");
  }
  if (n == 0) reader.fail("n_states must be positive");
  Eigen::VectorXd rewards(static_cast<Index>(n));
  Eigen::MatrixXd transitions(static_cast<Index>(n), static_cast<Index>(n));
  Eigen::RowVectorXd row;
  for (std::size_t s = 0; s < n; ++s) {
    read_row(reader, n, rewards(static_cast<Index>(s)), row);
    transitions.row(static_cast<Index>(s)) = row;
  }
  return TabularMRP(std::move(rewards), std::move(transitions), gamma, r_max);
}

void write_mrp(std::ostream& out, const TabularMRP& mrp) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mrp " << mrp.n_states() << ' ' << mrp.gamma() << ' ' << mrp.r_max() << '\n';
  for (std::size_t s = 0; s < mrp.n_states(); ++s) {
    write_row(out, mrp.rewards()(static_cast<Index>(s)),
              mrp.transitions().row(static_cast<Index>(s)));
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace fsrl
