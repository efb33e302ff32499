//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcp/kernel.hpp"
#include "gcp/loss.hpp"
#include "gcp/optimizer.hpp"

namespace gcp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidation = 1,
  kNumerical = 2,
};

struct RunConfig {
  std::string subcommand;
  std::string tensor;
  std::string loss = "gaussian";
  LossParams loss_params;
  std::size_t rank = 1;
  std::vector<double> reg{0.0};
  std::vector<std::uint64_t> seeds{0};
  OptOptions opt;
  bool nonneg = false;
  std::string out = ".";
};

/// Test seams. `gradient` replaces gcp_fg inside gradcheck.
struct Hooks {
  std::function<Gradient(const FitProblem &, const KruskalTensor &)> gradient;
};

/// Parses argv and runs one subcommand. Reports go to `out`, diagnostics to
/// `err`. Returns an ExitCode.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err, const Hooks &hooks = {});

/// Worst relative finite-difference error of each mode's gradient:
/// |g - fd| / max(|g|, |fd|, 1e-3 ||G_k||_inf) with central differences.
std::vector<double> gradient_errors(const FitProblem &p,
                                    const KruskalTensor &m, double h,
                                    const Hooks &hooks = {});

}  // namespace gcp::cli
