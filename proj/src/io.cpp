//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "gcp/error.hpp"

namespace gcp {

namespace fs = std::filesystem;

namespace {
  constexpr std::string_view kMagic = "gcptns";
  constexpr std::string_view kVersion = "v1";

  std::vector<std::string_view> split(std::string_view line,
                                      std::string_view seps) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t start = line.find_first_not_of(seps, pos);
      if (start == std::string_view::npos)
        break;
      std::size_t end = line.find_first_of(seps, start);
      if (end == std::string_view::npos)
        end = line.size();
      out.push_back(line.substr(start, end - start));
      pos = end;
    }
    return out;
  }

  std::string_view trim(std::string_view s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos)
      return {};
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  bool skippable(std::string_view line) {
    const std::string_view t = trim(line);
    return t.empty() || t.front() == '#';
  }

  std::optional<double> to_double(std::string_view tok) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      return std::nullopt;
    return v;
  }

  std::optional<std::size_t> to_size(std::string_view tok) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      return std::nullopt;
    return v;
  }

  double parse_value(std::string_view tok, std::size_t line) {
    const auto v = to_double(tok);
    if (!v)
      throw ParseError("bad value '" + std::string(tok) + "'", line);
    if (!std::isfinite(*v))
      throw ParseError("non-finite value '" + std::string(tok) + "'", line);
    return *v;
  }

  std::size_t parse_index(std::string_view tok, std::size_t dim,
                          std::size_t line) {
    const auto v = to_size(tok);
    if (!v)
      throw ParseError("bad index '" + std::string(tok) + "'", line);
    if (*v < 1 || *v > dim)
      throw ParseError("index " + std::string(tok) + " outside 1.."
                           + std::to_string(dim),
                       line);
    return *v - 1;
  }

  std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string format_matrix_csv(const Matrix &a) {
    std::string out;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (j > 0)
          out += ',';
        out += format_double(a(i, j));
      }
      out += '\n';
    }
    return out;
  }

  Matrix read_matrix_csv(const fs::path &path) {
    std::istringstream in(slurp(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (skippable(line))
        continue;
      std::vector<double> row;
      for (std::string_view tok : split(line, ",")) {
        tok = trim(tok);
        row.push_back(parse_value(tok, lineno));
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw ParseError(path.filename().string() + ": ragged row", lineno);
      rows.push_back(std::move(row));
    }
    if (rows.empty())
      throw ParseError(path.filename().string() + ": no rows", 0);
    Matrix a(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i][j];
    return a;
  }
}  // namespace

std::string_view storage_name(Storage s) noexcept {
  switch (s) {
  case Storage::dense:
    return "dense";
  case Storage::coo:
    return "coo";
  case Storage::scarce:
    return "scarce";
  }
  return "unknown";
}

const Shape &TensorFile::shape() const {
  return std::visit([](const auto &t) -> const Shape & { return t.shape(); },
                    tensor);
}

std::string format_double(double v) {
  char buf[64];
  const auto r =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

// --- tensor files -----------------------------------------------------------

TensorFile parse_tensor(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++lineno;
    have_header = !skippable(line);
  }
  if (!have_header)
    throw ParseError("missing header", lineno);

  const auto head = split(line, " \t\r");
  if (head.size() < 4 || head[0] != kMagic || head[1] != kVersion)
    throw ParseError("header must start with 'gcptns v1'", lineno);

  Storage storage;
  if (head[2] == "dense")
    storage = Storage::dense;
  else if (head[2] == "coo")
    storage = Storage::coo;
  else if (head[2] == "scarce")
    storage = Storage::scarce;
  else
    throw ParseError("unknown storage '" + std::string(head[2]) + "'", lineno);

  const auto d = to_size(head[3]);
  if (!d || *d < 1)
    throw ParseError("order must be a positive integer", lineno);
  if (head.size() != 4 + *d)
    throw ParseError("header lists " + std::to_string(head.size() - 4)
                         + " dimensions for order " + std::to_string(*d),
                     lineno);
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < *d; ++k) {
    const auto n = to_size(head[4 + k]);
    if (!n || *n < 1)
      throw ParseError("dimensions must be positive integers", lineno);
    dims.push_back(*n);
  }
  Shape shape = [&] {
    try {
      return Shape(dims);
    } catch (const Error &e) {
      throw ParseError(e.what(), lineno);
    }
  }();

  if (storage == Storage::dense) {
    std::vector<double> values;
    values.reserve(shape.total());
    while (std::getline(in, line)) {
      ++lineno;
      if (skippable(line))
        continue;
      for (std::string_view tok : split(line, " \t\r")) {
        if (values.size() == shape.total())
          throw ParseError("more values than the shape holds", lineno);
        values.push_back(parse_value(tok, lineno));
      }
    }
    if (values.size() != shape.total())
      throw ParseError("expected " + std::to_string(shape.total())
                           + " values, found " + std::to_string(values.size()),
                       lineno);
    return {storage, DenseTensor(std::move(shape), std::move(values))};
  }

  std::vector<std::size_t> subs;
  std::vector<double> values;
  std::set<std::size_t> seen;
  MultiIndex idx(*d);
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line))
      continue;
    const auto toks = split(line, " \t\r");
    if (toks.size() != *d + 1)
      throw ParseError("expected " + std::to_string(*d + 1) + " fields",
                       lineno);
    for (std::size_t k = 0; k < *d; ++k)
      idx[k] = parse_index(toks[k], dims[k], lineno);
    if (!seen.insert(linear_index(shape, idx)).second)
      throw ParseError("duplicate index", lineno);
    subs.insert(subs.end(), idx.begin(), idx.end());
    values.push_back(parse_value(toks[*d], lineno));
  }
  return {storage,
          CooTensor(std::move(shape), std::move(subs), std::move(values))};
}

void format_tensor(std::ostream &out, const TensorFile &t) {
  const Shape &shape = t.shape();
  out << kMagic << ' ' << kVersion << ' ' << storage_name(t.storage) << ' '
      << shape.order();
  for (std::size_t n : shape.dims())
    out << ' ' << n;
  out << '\n';

  if (t.storage == Storage::dense) {
    const auto *x = std::get_if<DenseTensor>(&t.tensor);
    if (!x)
      throw ContractError("dense storage needs a dense tensor");
    for (double v : x->values())
      out << format_double(v) << '\n';
    return;
  }
  const auto *x = std::get_if<CooTensor>(&t.tensor);
  if (!x)
    throw ContractError("coordinate storage needs a coordinate tensor");
  for (std::size_t e = 0; e < x->nnz(); ++e) {
    for (std::size_t i : x->index(e))
      out << i + 1 << ' ';
    out << format_double(x->value(e)) << '\n';
  }
}

TensorFile read_tensor(const fs::path &path) {
  std::istringstream in(slurp(path));
  return parse_tensor(in);
}

void write_tensor(const fs::path &path, const TensorFile &t) {
  std::ostringstream out;
  format_tensor(out, t);
  write_file_atomic(path, out.str());
}

void write_tensor(const fs::path &path, const DenseTensor &t) {
  write_tensor(path, TensorFile{Storage::dense, t});
}

CooTensor import_csv_coo(const fs::path &path, std::optional<Shape> shape) {
  std::istringstream in(slurp(path));
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = shape ? shape->order() : 0;
  std::vector<std::size_t> subs;
  std::vector<double> values;
  bool first = true;

  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line))
      continue;
    auto toks = split(line, ",");
    for (auto &tok : toks)
      tok = trim(tok);
    if (first) {
      first = false;
      const bool numeric = std::all_of(toks.begin(), toks.end(),
                                       [](auto tok) { return to_double(tok); });
      if (!numeric)
        continue;
    }
    if (d == 0) {
      if (toks.size() < 2)
        throw ParseError("need at least one index column and a value", lineno);
      d = toks.size() - 1;
    }
    if (toks.size() != d + 1)
      throw ParseError("expected " + std::to_string(d + 1) + " columns",
                       lineno);
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t limit =
          shape ? shape->dim(k) : std::numeric_limits<std::size_t>::max();
      subs.push_back(parse_index(toks[k], limit, lineno));
    }
    values.push_back(parse_value(toks[d], lineno));
  }
  if (d == 0)
    throw ParseError("no entries and no shape", lineno);

  if (!shape) {
    std::vector<std::size_t> dims(d, 1);
    for (std::size_t e = 0; e < values.size(); ++e)
      for (std::size_t k = 0; k < d; ++k)
        dims[k] = std::max(dims[k], subs[e * d + k] + 1);
    shape = Shape(std::move(dims));
  }
  return CooTensor(*shape, std::move(subs), std::move(values));
}

FitProblem make_problem(const TensorFile &t, const LossSpec &loss,
                        std::size_t rank) {
  switch (t.storage) {
  case Storage::dense:
    return FitProblem::dense(std::get<DenseTensor>(t.tensor), loss, rank);
  case Storage::coo:
    return FitProblem::sparse(std::get<CooTensor>(t.tensor), loss, rank);
  case Storage::scarce:
    return FitProblem::scarce(std::get<CooTensor>(t.tensor), loss, rank);
  }
  throw ContractError("unknown storage");
}

// --- factors and traces -----------------------------------------------------

void write_factors(const fs::path &dir, const KruskalTensor &m) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < m.order(); ++k)
    write_file_atomic(dir / ("factor_" + std::to_string(k + 1) + ".csv"),
                      format_matrix_csv(m.factor(k)));
  std::string lambda;
  const Vector w = m.weights();
  for (Eigen::Index j = 0; j < w.size(); ++j)
    lambda += format_double(w(j)) + '\n';
  write_file_atomic(dir / "lambda.csv", lambda);
}

KruskalTensor read_factors(const fs::path &dir) {
  std::vector<Matrix> factors;
  for (std::size_t k = 1;; ++k) {
    const fs::path p = dir / ("factor_" + std::to_string(k) + ".csv");
    if (!fs::exists(p))
      break;
    factors.push_back(read_matrix_csv(p));
  }
  if (factors.empty())
    throw Error("no factor_1.csv in " + dir.string());
  const fs::path lp = dir / "lambda.csv";
  if (!fs::exists(lp))
    return KruskalTensor(std::move(factors));
  const Matrix w = read_matrix_csv(lp);
  if (w.cols() != 1)
    throw ParseError("lambda.csv must have one column", 0);
  return KruskalTensor(std::move(factors), Vector(w.col(0)));
}

void write_trace_csv(const fs::path &path, const OptTrace &t) {
  std::string out = "iteration,F,projected_grad_norm,step\n";
  for (const IterationRecord &r : t.records)
    out += std::to_string(r.iteration) + ',' + format_double(r.value) + ','
           + format_double(r.projected_grad_norm) + ','
           + format_double(r.step) + '\n';
  write_file_atomic(path, out);
}

void write_file_atomic(const fs::path &path, const std::string &content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace gcp
