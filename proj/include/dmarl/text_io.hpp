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

#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace dmarl::text {

/// Shortest-safe round-trip form: printf("%.17g"). "nan"/"inf" for specials.
std::string format_double(double x);

/// Writes "<name> <rows> <cols>" followed by one line per row.
void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m);

/// Reads a block written by write_matrix; throws if the name does not match.
Eigen::MatrixXd read_matrix(std::istream& in, const std::string& name);

}  // namespace dmarl::text
