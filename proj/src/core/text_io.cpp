// Copyright 2026 The dmarl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmarl/text_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "dmarl/error.hpp"
#include "dmarl/mdp.hpp"

namespace dmarl {

namespace text {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& name) {
  std::string got;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> got >> rows >> cols) || got != name || rows < 0 || cols < 0) {
    fail(ErrorKind::kIo, "expected matrix block '" + name + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(in >> tok)) fail(ErrorKind::kIo, "truncated matrix block '" + name + "'");
      m(r, c) = std::stod(tok);
    }
  }
  return m;
}

}  // namespace text

namespace mdp {

void write_mdp_text(const MultiAgentMdp& mdp, std::ostream& out) {
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  out << "dmarl-mdp 1\n";
  out << "states " << S << '\n';
  out << "agents " << mdp.num_agents() << '\n';
  out << "actions";
  for (int a : mdp.action_counts()) out << ' ' << a;
  out << '\n';
  out << "gamma " << text::format_double(mdp.gamma()) << '\n';
  Eigen::MatrixXd restart(1, S);
  for (int s = 0; s < S; ++s) restart(0, s) = mdp.restart()[static_cast<std::size_t>(s)];
  text::write_matrix(out, "restart", restart);
  auto dump = [&](const std::string& name, const std::vector<double>& tensor) {
    Eigen::MatrixXd m(S * A, S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int n = 0; n < S; ++n) m(s * A + a, n) = tensor[mdp.index(s, a, n)];
    text::write_matrix(out, name, m);
  };
  dump("transition", mdp.transition_tensor());
  for (int m = 0; m < mdp.num_agents(); ++m) dump("reward" + std::to_string(m), mdp.reward_tensor(m));
}

MultiAgentMdp read_mdp_text(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "dmarl-mdp" || version != 1) {
    fail(ErrorKind::kIo, "not a dmarl MDP dump");
  }
  int S = 0;
  int M = 0;
  in >> tag >> S;
  if (tag != "states") fail(ErrorKind::kIo, "expected 'states'");
  in >> tag >> M;
  if (tag != "agents" || M < 1) fail(ErrorKind::kIo, "expected 'agents'");
  in >> tag;
  if (tag != "actions") fail(ErrorKind::kIo, "expected 'actions'");
  std::vector<int> actions(static_cast<std::size_t>(M));
  for (int& a : actions) in >> a;
  std::string gamma_tok;
  in >> tag >> gamma_tok;
  if (!in || tag != "gamma") fail(ErrorKind::kIo, "expected 'gamma'");
  const Eigen::MatrixXd restart_m = text::read_matrix(in, "restart");
  std::vector<double> restart(restart_m.data(), restart_m.data() + restart_m.size());
  auto load = [&](const std::string& name) {
    const Eigen::MatrixXd m = text::read_matrix(in, name);
    if (m.cols() != S || m.rows() % std::max(S, 1) != 0) fail(ErrorKind::kIo, "bad tensor shape for " + name);
    std::vector<double> tensor(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) tensor[static_cast<std::size_t>(r * S + c)] = m(r, c);
    return tensor;
  };
  std::vector<double> p = load("transition");
  std::vector<std::vector<double>> rewards;
  for (int m = 0; m < M; ++m) rewards.push_back(load("reward" + std::to_string(m)));
  return MultiAgentMdp(S, std::move(actions), std::move(p), std::move(rewards),
                       std::stod(gamma_tok), std::move(restart));
}

}  // namespace mdp

}  // namespace dmarl
