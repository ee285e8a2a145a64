#pragma once

#include <iosfwd>
#include <string>

#include "fsrl/tabular.hpp"

namespace fsrl {

// Plain-text matrix format.
//
//   # comment
//   mdp <n_states> <n_actions> <gamma> <r_max>
//   terminal <s> <s> ...            (optional)
//   <reward> <p_0> ... <p_{n-1}>    one line per (state, action), state-major
//
// MRPs use the header `mrp <n_states> <gamma> <r_max>` followed by one line
// per state. Values are written with round-trip precision.

TabularMDP read_mdp(std::istream& in);
void write_mdp(std::ostream& out, const TabularMDP& mdp);
TabularMDP load_mdp(const std::string& path);
void save_mdp(const std::string& path, const TabularMDP& mdp);

TabularMRP read_mrp(std::istream& in);
void write_mrp(std::ostream& out, const TabularMRP& mrp);

}  // namespace fsrl
