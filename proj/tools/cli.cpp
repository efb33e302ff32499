//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcp/error.hpp"
#include "gcp/holdout.hpp"
#include "gcp/io.hpp"
#include "gcp/random.hpp"
#include "gcp/sampling.hpp"

namespace gcp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
  constexpr double kGradcheckLimit = 1e-4;

  LossKind loss_kind(const std::string &name) {
    const auto k = parse_loss_kind(name);
    if (!k)
      throw DomainError("unknown loss '" + name + "'");
    return *k;
  }

  LossSpec loss_spec(const std::string &name, const LossParams &params) {
    return LossSpec(loss_kind(name), params);
  }

  // "N" alone means N consecutive seeds from `base`; a comma list is taken
  // verbatim.
  std::vector<std::uint64_t> parse_seeds(const std::string &text,
                                         std::uint64_t base) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty())
        continue;
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size())
        throw DomainError("bad seed '" + tok + "'");
      out.push_back(v);
    }
    if (out.empty())
      throw DomainError("--seeds needs at least one value");
    if (out.size() == 1 && text.find(',') == std::string::npos) {
      const std::uint64_t n = out.front();
      if (n < 1)
        throw DomainError("--seeds count must be at least 1");
      out.clear();
      for (std::uint64_t i = 0; i < n; ++i)
        out.push_back(base + i);
    }
    return out;
  }

  void configure(FitProblem &p, const RunConfig &cfg) {
    p.set_regularization(cfg.reg);
    const double lower =
        p.loss().bounded() || cfg.nonneg
            ? 0.0
            : -std::numeric_limits<double>::infinity();
    p.set_lower_bounds(std::vector<double>(p.shape().order(), lower));
  }

  double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  }

  // --- fit ------------------------------------------------------------------

  int cmd_fit(const RunConfig &cfg, std::ostream &out) {
    const TensorFile tf = read_tensor(cfg.tensor);
    FitProblem p =
        make_problem(tf, loss_spec(cfg.loss, cfg.loss_params), cfg.rank);
    configure(p, cfg);

    const MultiStartResult ms = fit_gcp_multistart(p, cfg.seeds, cfg.opt);
    const FitResult &best = ms.runs[ms.best];

    json runs = json::array();
    for (const FitResult &r : ms.runs)
      runs.push_back({{"seed", r.seed},
                      {"F", r.value},
                      {"status", status_name(r.trace.status)},
                      {"iterations", r.trace.records.size() - 1}});
    const json summary = {
        {"loss", cfg.loss},
        {"rank", cfg.rank},
        {"storage", storage_name(tf.storage)},
        {"best_seed", best.seed},
        {"F", best.value},
        {"status", status_name(best.trace.status)},
        {"iterations", best.trace.records.size() - 1},
        {"runs", runs},
    };

    // Everything is computed before the first file is written.
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_factors(dir, best.model);
    write_trace_csv(dir / "trace.csv", best.trace);
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

    for (const FitResult &r : ms.runs)
      out << "seed " << r.seed << "  F = " << format_double(r.value) << "  "
          << status_name(r.trace.status) << "\n";
    out << "best seed " << best.seed << "  F = " << format_double(best.value)
        << "\n";
    return kSuccess;
  }

  // --- gradcheck ------------------------------------------------------------

  struct CheckSetup {
    std::vector<std::size_t> shape{5, 4, 3};
    double step = 1e-5;
    double observed = 0.5;
    std::vector<std::string> layouts{"dense", "scarce"};
  };

  // Data the loss accepts, drawn from a related distribution.
  DenseTensor check_data(const LossSpec &loss, const KruskalTensor &m,
                         std::uint64_t seed) {
    switch (loss.kind()) {
    case LossKind::gaussian:
    case LossKind::huber:
      return sample_from_model(m, LossKind::gaussian, seed, {0.5, 1.0, 1.0});
    case LossKind::gamma:
    case LossKind::beta_div:
      return sample_from_model(m, LossKind::gamma, seed, {0.0, 2.0, 1.0});
    case LossKind::negbinom:
      return sample_from_model(m, LossKind::negbinom, seed,
                               {0.0, 1.0, loss.params().failures});
    default:
      return sample_from_model(m, loss.kind(), seed);
    }
  }

  int cmd_gradcheck(const RunConfig &cfg, const CheckSetup &setup,
                    bool all_losses, std::ostream &out, const Hooks &hooks) {
    std::vector<LossKind> kinds =
        all_losses ? all_loss_kinds() : std::vector{loss_kind(cfg.loss)};
    const Shape shape(setup.shape);
    double worst = 0.0;

    out << "loss,layout,seed,mode,max_rel_err\n";
    for (LossKind kind : kinds) {
      const LossSpec loss(kind, cfg.loss_params);
      for (std::uint64_t seed : cfg.seeds) {
        const KruskalTensor m =
            loss.bounded() ? random_model(shape, cfg.rank, seed, 0.5, 1.5)
                           : random_model(shape, cfg.rank, seed, -1.0, 1.0);
        DenseTensor x = check_data(loss, m, seed + 1000);
        if (kind == LossKind::huber) {
          // Keep every point away from the branch switch at |x - m| = delta.
          const DenseTensor mf = full(m);
          const double delta = loss.params().delta;
          for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(std::abs(x[i] - mf[i]) - delta) < 0.05 * delta)
              x[i] += 0.5 * delta;
        }

        for (const std::string &layout : setup.layouts) {
          std::optional<FitProblem> p;
          if (layout == "dense") {
            p = FitProblem::dense(x, loss, cfg.rank);
          } else {
            const Holdout h = make_holdout_random(x, 1.0 - setup.observed,
                                                  seed + 2000);
            std::vector<std::size_t> subs;
            std::vector<double> vals;
            for (std::size_t i : h.train) {
              const MultiIndex idx = multi_index(shape, i);
              subs.insert(subs.end(), idx.begin(), idx.end());
              vals.push_back(x[i]);
            }
            p = FitProblem::scarce(CooTensor(shape, subs, vals), loss,
                                   cfg.rank);
          }
          p->set_regularization(cfg.reg);
          const std::vector<double> errs =
              gradient_errors(*p, m, setup.step, hooks);
          for (std::size_t k = 0; k < errs.size(); ++k) {
            out << loss.name() << ',' << layout << ',' << seed << ','
                << k + 1 << ',' << std::scientific << std::setprecision(3)
                << errs[k] << std::defaultfloat << '\n';
            worst = std::max(worst, errs[k]);
          }
        }
      }
    }
    const bool ok = worst <= kGradcheckLimit;
    out << (ok ? "PASS" : "FAIL") << " worst relative error "
        << std::scientific << std::setprecision(3) << worst
        << std::defaultfloat << " (limit " << kGradcheckLimit << ")\n";
    return ok ? kSuccess : kValidation;
  }

  // --- synth ----------------------------------------------------------------

  struct SynthSetup {
    std::vector<std::size_t> shape{30, 30, 30};
    double scale = 1.0;
    SampleParams sample;
    std::string storage = "dense";
    double observed = 1.0;
  };

  int cmd_synth(const RunConfig &cfg, const SynthSetup &setup,
                std::ostream &out) {
    const LossKind dist = loss_kind(cfg.loss);
    const Shape shape(setup.shape);
    const std::uint64_t seed = cfg.seeds.front();
    const KruskalTensor truth =
        random_model(shape, cfg.rank, seed, 0.0, setup.scale);
    SampleParams sp = setup.sample;
    sp.failures = cfg.loss_params.failures;
    const DenseTensor x = sample_from_model(truth, dist, seed + 1, sp);

    TensorFile tf{Storage::dense, x};
    if (setup.storage == "coo" || setup.storage == "scarce") {
      const bool scarce = setup.storage == "scarce";
      std::vector<bool> keep(x.size(), true);
      if (scarce) {
        const Holdout h = make_holdout_random(x, 1.0 - setup.observed, seed + 2);
        for (std::size_t i : h.test)
          keep[i] = false;
      }
      std::vector<std::size_t> subs;
      std::vector<double> vals;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!keep[i] || (!scarce && x[i] == 0.0))
          continue;
        const MultiIndex idx = multi_index(shape, i);
        subs.insert(subs.end(), idx.begin(), idx.end());
        vals.push_back(x[i]);
      }
      tf = {scarce ? Storage::scarce : Storage::coo,
            CooTensor(shape, std::move(subs), std::move(vals))};
    } else if (setup.storage != "dense") {
      throw DomainError("unknown storage '" + setup.storage + "'");
    }

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_tensor(dir / "tensor.tns", tf);
    write_factors(dir / "truth", truth);

    double data_mean = 0.0;
    for (double v : x.values())
      data_mean += v;
    data_mean /= static_cast<double>(x.size());
    const DenseTensor mf = full(truth);
    double expected = 0.0;
    for (double v : mf.values())
      expected += sample_mean(dist, v, sp);
    expected /= static_cast<double>(mf.size());

    out << "wrote " << (dir / "tensor.tns").string() << " ("
        << storage_name(tf.storage) << ")\n"
        << "data mean " << format_double(data_mean) << "  expected mean "
        << format_double(expected) << "\n";
    return kSuccess;
  }

  // --- predict --------------------------------------------------------------

  struct PredictSetup {
    std::vector<std::string> losses{"gaussian", "bernoulli_odds",
                                    "bernoulli_logit"};
    std::size_t trials = 1;
    std::size_t ones = 50;
    std::size_t zeros = 50;
  };

  int cmd_predict(const RunConfig &cfg, const PredictSetup &setup,
                  std::ostream &out) {
    const TensorFile tf = read_tensor(cfg.tensor);
    const DenseTensor x = tf.storage == Storage::dense
                              ? std::get<DenseTensor>(tf.tensor)
                              : to_dense(std::get<CooTensor>(tf.tensor));
    if (tf.storage == Storage::scarce)
      throw DomainError("predict needs a fully observed tensor");
    if (setup.trials < 1)
      throw DomainError("--trials must be at least 1");

    std::vector<LossSpec> specs;
    for (const std::string &name : setup.losses) {
      specs.push_back(loss_spec(name, cfg.loss_params));
      probability_of_one(specs.back(), 0.5);  // rejects unsupported losses
    }

    const std::uint64_t base = cfg.seeds.front();
    std::map<std::string, std::vector<double>> per_loss;
    std::string trials_csv = "trial,loss,loglik,F,status\n";
    for (std::size_t t = 0; t < setup.trials; ++t) {
      const Holdout h = make_holdout(x, setup.ones, setup.zeros, base + t);
      for (const LossSpec &loss : specs) {
        FitProblem p = FitProblem::dense(x, loss, cfg.rank, h.train_weights());
        configure(p, cfg);
        OptOptions opts = cfg.opt;
        opts.seed = base + t;
        const FitResult r = fit_gcp(p, opts);
        const double ll = heldout_loglik(r.model, h, loss);
        per_loss[std::string(loss.name())].push_back(ll);
        trials_csv += std::to_string(t + 1) + ',' + std::string(loss.name())
                      + ',' + format_double(ll) + ',' + format_double(r.value)
                      + ',' + std::string(status_name(r.trace.status)) + '\n';
      }
    }

    std::string summary_csv = "loss,trials,min,q1,median,q3,max\n";
    out << "loss               median held-out log-likelihood\n";
    for (const LossSpec &loss : specs) {
      const std::vector<double> &v = per_loss[std::string(loss.name())];
      summary_csv += std::string(loss.name()) + ',' + std::to_string(v.size());
      for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
        summary_csv += ',' + format_double(quantile(v, q));
      summary_csv += '\n';
      out << std::left << std::setw(18) << loss.name() << ' '
          << format_double(quantile(v, 0.5)) << '\n';
    }

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_file_atomic(dir / "trials.csv", trials_csv);
    write_file_atomic(dir / "summary.csv", summary_csv);
    return kSuccess;
  }

  // --- export ---------------------------------------------------------------

  int cmd_export(const RunConfig &cfg, const std::string &model_dir,
                 bool write_full, std::ostream &out) {
    const KruskalTensor m = normalize(read_factors(model_dir));
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_factors(dir, m);
    if (write_full)
      write_tensor(dir / "model.tns", full(m));
    out << "exported rank-" << m.rank() << " model with " << m.order()
        << " modes to " << dir.string() << "\n";
    return kSuccess;
  }

  // --- option wiring ----------------------------------------------------------

  struct Common {
    std::string seeds;
    std::uint64_t seed = 0;
  };

  void add_loss_options(CLI::App *sub, RunConfig &cfg) {
    sub->add_option("--loss", cfg.loss, "Loss name")->capture_default_str();
    sub->add_option("--epsilon", cfg.loss_params.epsilon, "Loss shift eps")
        ->capture_default_str();
    sub->add_option("--delta", cfg.loss_params.delta, "Huber threshold")
        ->capture_default_str();
    sub->add_option("--beta", cfg.loss_params.beta, "beta-divergence exponent")
        ->capture_default_str();
    sub->add_option("--failures", cfg.loss_params.failures,
                    "Negative binomial failures r")
        ->capture_default_str();
  }

  void add_fit_options(CLI::App *sub, RunConfig &cfg) {
    sub->add_option("--reg", cfg.reg, "L2 penalty eta, one or one per mode")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--maxiters", cfg.opt.max_iters, "Iteration cap")
        ->capture_default_str();
    sub->add_option("--gtol", cfg.opt.grad_tol,
                    "Projected gradient tolerance")
        ->capture_default_str();
    sub->add_option("--ftol", cfg.opt.rel_f_tol, "Relative F change tolerance")
        ->capture_default_str();
    sub->add_option("--memory", cfg.opt.memory, "Stored curvature pairs")
        ->capture_default_str();
    sub->add_flag("--nonneg", cfg.nonneg,
                  "Nonnegative factors for unbounded losses too");
  }

  void add_seed_options(CLI::App *sub, Common &c) {
    sub->add_option("--seeds", c.seeds,
                    "Comma list of seeds, or a count N for N seeds from --seed");
    sub->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  }
}  // namespace

std::vector<double> gradient_errors(const FitProblem &p,
                                    const KruskalTensor &m, double h,
                                    const Hooks &hooks) {
  const auto fg = [&](const KruskalTensor &mm) {
    return hooks.gradient ? hooks.gradient(p, mm) : gcp_fg(p, mm);
  };
  const Gradient g = fg(m);
  std::vector<double> errs;
  for (std::size_t k = 0; k < m.order(); ++k) {
    const Matrix &gk = g.factor_grads[k];
    const double floor = 1e-3 * gk.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < gk.cols(); ++j)
      for (Eigen::Index i = 0; i < gk.rows(); ++i) {
        std::vector<Matrix> plus = m.factors();
        std::vector<Matrix> minus = m.factors();
        const double step = h * std::max(1.0, std::abs(plus[k](i, j)));
        plus[k](i, j) += step;
        minus[k](i, j) -= step;
        const double fd = (gcp_fg(p, KruskalTensor(plus)).value
                           - gcp_fg(p, KruskalTensor(minus)).value)
                          / (2.0 * step);
        const double scale =
            std::max({std::abs(gk(i, j)), std::abs(fd), floor, 1e-300});
        worst = std::max(worst, std::abs(gk(i, j) - fd) / scale);
      }
    errs.push_back(worst);
  }
  return errs;
}

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err, const Hooks &hooks) {
  CLI::App app{"Generalized CP tensor decomposition", "gcp"};
  app.set_config("--config", "", "INI/TOML file of options; flags win");
  app.require_subcommand(1);

  RunConfig cfg;
  Common common;

  CLI::App *fit = app.add_subcommand("fit", "Fit a GCP model to a tensor file");
  fit->add_option("--tensor", cfg.tensor, "Input tensor file")->required();
  add_loss_options(fit, cfg);
  fit->add_option("--rank", cfg.rank, "Model rank")->capture_default_str();
  add_fit_options(fit, cfg);
  add_seed_options(fit, common);
  fit->add_option("--out", cfg.out, "Output directory")->capture_default_str();

  CheckSetup check;
  bool all_losses = true;
  CLI::App *gc = app.add_subcommand(
      "gradcheck", "Compare gradients against central finite differences");
  add_loss_options(gc, cfg);
  gc->add_option("--rank", cfg.rank, "Model rank")->capture_default_str();
  gc->add_option("--shape", check.shape, "Tensor shape, e.g. 5,4,3")
      ->delimiter(',')
      ->capture_default_str();
  gc->add_option("--reg", cfg.reg, "L2 penalty")->delimiter(',');
  gc->add_option("--step", check.step, "Relative difference step")
      ->capture_default_str();
  gc->add_option("--observed", check.observed,
                 "Observed fraction for the scarce layout")
      ->capture_default_str();
  gc->add_option("--layouts", check.layouts, "dense and/or scarce")
      ->delimiter(',')
      ->capture_default_str();
  add_seed_options(gc, common);

  SynthSetup synth;
  CLI::App *sy = app.add_subcommand(
      "synth", "Sample a tensor from a random ground-truth model");
  sy->add_option("--shape", synth.shape, "Tensor shape, e.g. 30,30,30")
      ->delimiter(',')
      ->capture_default_str();
  add_loss_options(sy, cfg);
  sy->add_option("--rank", cfg.rank, "Truth rank")->capture_default_str();
  sy->add_option("--scale", synth.scale,
                 "Truth factor entries are uniform [0, scale)")
      ->capture_default_str();
  sy->add_option("--sigma", synth.sample.sigma, "Gaussian noise level")
      ->capture_default_str();
  sy->add_option("--gamma-shape", synth.sample.gamma_shape, "Gamma shape k")
      ->capture_default_str();
  sy->add_option("--storage", synth.storage, "dense, coo or scarce")
      ->capture_default_str();
  sy->add_option("--observed", synth.observed,
                 "Observed fraction for scarce storage")
      ->capture_default_str();
  add_seed_options(sy, common);
  sy->add_option("--out", cfg.out, "Output directory")->capture_default_str();

  PredictSetup pred;
  CLI::App *pr = app.add_subcommand(
      "predict", "Held-out log-likelihood of binary entries per loss");
  pr->add_option("--tensor", cfg.tensor, "Binary tensor file")->required();
  pr->add_option("--losses", pred.losses, "Losses to compare")
      ->delimiter(',')
      ->capture_default_str();
  pr->add_option("--trials", pred.trials, "Number of holdout trials")
      ->capture_default_str();
  pr->add_option("--ones", pred.ones, "Held-out ones per trial")
      ->capture_default_str();
  pr->add_option("--zeros", pred.zeros, "Held-out zeros per trial")
      ->capture_default_str();
  pr->add_option("--rank", cfg.rank, "Model rank")->capture_default_str();
  pr->add_option("--epsilon", cfg.loss_params.epsilon, "Loss shift eps")
      ->capture_default_str();
  add_fit_options(pr, cfg);
  add_seed_options(pr, common);
  pr->add_option("--out", cfg.out, "Output directory")->capture_default_str();

  std::string model_dir;
  bool write_full = false;
  CLI::App *ex = app.add_subcommand(
      "export", "Normalize stored factors and optionally write the full model");
  ex->add_option("--model", model_dir, "Directory with factor_k.csv files")
      ->required();
  ex->add_flag("--full", write_full, "Also write model.tns");
  ex->add_option("--out", cfg.out, "Output directory")->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (cfg.rank < 1)
      throw ShapeError("--rank must be at least 1");
    cfg.seeds = common.seeds.empty() ? std::vector{common.seed}
                                     : parse_seeds(common.seeds, common.seed);
    cfg.opt.validate();

    if (*fit) {
      cfg.subcommand = "fit";
      return cmd_fit(cfg, out);
    }
    if (*gc) {
      cfg.subcommand = "gradcheck";
      all_losses = gc->count("--loss") == 0;
      return cmd_gradcheck(cfg, check, all_losses, out, hooks);
    }
    if (*sy) {
      cfg.subcommand = "synth";
      return cmd_synth(cfg, synth, out);
    }
    if (*pr) {
      cfg.subcommand = "predict";
      return cmd_predict(cfg, pred, out);
    }
    cfg.subcommand = "export";
    return cmd_export(cfg, model_dir, write_full, out);
  } catch (const NumericalError &e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace gcp::cli
