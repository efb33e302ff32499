//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Text file formats.
//
// Tensor file grammar (indices 1-based, values as 17 significant digits):
//
//   file    := header NL payload
//   header  := "gcptns" "v1" storage d n_1 ... n_d
//   storage := "dense" | "coo" | "scarce"
//   payload := dense: prod(n_k) values in linear order, any whitespace
//              coo/scarce: one line "i_1 ... i_d value" per entry
//
// Blank lines and lines starting with '#' are ignored. "coo" lists the
// nonzeros of a fully observed tensor; "scarce" lists the observed entries
// of a tensor with missing data.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "gcp/kernel.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/optimizer.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

enum class Storage { dense, coo, scarce };

std::string_view storage_name(Storage s) noexcept;

struct TensorFile {
  Storage storage = Storage::dense;
  std::variant<DenseTensor, CooTensor> tensor;

  const Shape &shape() const;
};

TensorFile parse_tensor(std::istream &in);
void format_tensor(std::ostream &out, const TensorFile &t);

/// Throws ParseError (with line number) on malformed input and Error when
/// the file cannot be opened.
TensorFile read_tensor(const std::filesystem::path &path);
/// Atomic: written to a sibling temporary, then renamed.
void write_tensor(const std::filesystem::path &path, const TensorFile &t);
void write_tensor(const std::filesystem::path &path, const DenseTensor &t);

/// CSV with columns i_1, ..., i_d, value (1-based indices). A first line
/// that does not parse as numbers is taken as a header. Without `shape` the
/// dimensions are the largest index seen in each mode.
CooTensor import_csv_coo(const std::filesystem::path &path,
                         std::optional<Shape> shape = std::nullopt);

/// FitProblem for a tensor file: dense -> dense, coo -> sparse,
/// scarce -> scarce.
FitProblem make_problem(const TensorFile &t, const LossSpec &loss,
                        std::size_t rank);

/// factor_1.csv ... factor_d.csv (n_k rows, r columns) and lambda.csv (one
/// weight per line, all ones when the model has none) in `dir`.
void write_factors(const std::filesystem::path &dir, const KruskalTensor &m);
/// Reads factor_1.csv, factor_2.csv, ... until one is missing, plus
/// lambda.csv when present.
KruskalTensor read_factors(const std::filesystem::path &dir);

/// Columns iteration,F,projected_grad_norm,step.
void write_trace_csv(const std::filesystem::path &path, const OptTrace &t);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path &path,
                       const std::string &content);

/// 17 significant digits, enough for an exact double round trip.
std::string format_double(double v);

}  // namespace gcp
