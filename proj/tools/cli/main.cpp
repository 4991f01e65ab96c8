// lbp: command-line front end for the logistic branching process toolkit.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lbp/diffusion.hpp>
#include <lbp/error.hpp>
#include <lbp/fixation.hpp>
#include <lbp/ibm.hpp>
#include <lbp/invasibility.hpp>
#include <lbp/model.hpp>
#include <lbp/selection.hpp>
#include <lbp/stationary.hpp>
#include <lbp/tss.hpp>

#include "verify/acceptance.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kVerification = 3 };

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int jobs = 1;
  double tol_trunc = 1e-8;
  double tol_resid = 1e-12;

  lbp::FixationOptions fixation() const {
    lbp::FixationOptions f;
    f.tol_trunc = tol_trunc;
    f.tol_resid = tol_resid;
    return f;
  }
  lbp::DifferentiationOptions differentiation() const {
    lbp::DifferentiationOptions d;
    d.fixation = fixation();
    return d;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Model configuration file");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory (CSV files and manifest.json)");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--tol-trunc", c.tol_trunc, "Lattice truncation tolerance")->check(CLI::Range(0.0, 1.0));
  app->add_option("--tol-resid", c.tol_resid, "Linear-system residual tolerance")->check(CLI::Range(0.0, 1.0));
}

lbp::ModelSpec require_model(const Common& c) {
  if (c.config.empty()) throw CLI::RequiredError("--config");
  return lbp::load_model(c.config);
}

lbp::TraitPoint trait_or_origin(const std::vector<double>& v, int dimension, const char* flag) {
  if (v.empty()) return lbp::TraitPoint(std::vector<double>(static_cast<std::size_t>(dimension), 0.0));
  if (static_cast<int>(v.size()) != dimension) {
    throw lbp::ModelError(std::string(flag) + " has " + std::to_string(v.size()) + " coordinates, model has k=" +
                          std::to_string(dimension));
  }
  return lbp::TraitPoint(v);
}

// Collects the files a subcommand writes and finishes with manifest.json.
class OutputDir {
 public:
  OutputDir(const Common& c, std::string subcommand, std::vector<std::string> argv)
      : common_(c), subcommand_(std::move(subcommand)), argv_(std::move(argv)),
        start_(std::chrono::system_clock::now()) {
    if (!c.out.empty()) fs::create_directories(c.out);
  }

  bool enabled() const { return !common_.out.empty(); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    if (!enabled()) return;
    const fs::path p = fs::path(common_.out) / name;
    std::ofstream f(p, std::ios::binary);
    f.imbue(std::locale::classic());
    body(f);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    files_.push_back(name);
  }

  void finish(json extra = json::object()) {
    if (!enabled()) return;
    const auto end = std::chrono::system_clock::now();
    const std::time_t started = std::chrono::system_clock::to_time_t(start_);
    std::ostringstream stamp;
    stamp << std::put_time(std::gmtime(&started), "%Y-%m-%dT%H:%M:%SZ");
    json m;
    m["subcommand"] = subcommand_;
    m["tool_version"] = kVersion;
    m["argv"] = argv_;
    m["config_path"] = common_.config;
    if (!common_.config.empty()) {
      std::ifstream in(common_.config, std::ios::binary);
      m["config_text"] = std::string(std::istreambuf_iterator<char>(in), {});
    }
    m["seed"] = common_.seed;
    m["jobs"] = common_.jobs;
    m["tol_trunc"] = common_.tol_trunc;
    m["tol_resid"] = common_.tol_resid;
    m["output_directory"] = common_.out;
    m["files"] = files_;
    m["started_utc"] = stamp.str();
    m["wall_clock_seconds"] = std::chrono::duration<double>(end - start_).count();
    m["parameters"] = std::move(extra);
    std::ofstream f(fs::path(common_.out) / "manifest.json");
    f << m.dump(2) << '\n';
  }

 private:
  const Common& common_;
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::chrono::system_clock::time_point start_;
  std::vector<std::string> files_;
};

}  // namespace

int main(int argc, char** argv) {
  std::cout.imbue(std::locale::classic());
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Logistic branching process: simulation, fixation, invasibility and canonical diffusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Common common;

  // ibm
  auto* ibm = app.add_subcommand("ibm", "Exact individual-based simulation");
  add_common(ibm, common);
  double ibm_t_end = 100.0, ibm_gamma = 1.0, ibm_dt = 1.0, ibm_burn = -1.0;
  std::string ibm_record = "sampled";
  long ibm_init = 1;
  std::vector<double> ibm_x0;
  bool ibm_dump = false, ibm_check = false;
  ibm->add_option("--t-end", ibm_t_end, "Horizon")->check(CLI::PositiveNumber);
  ibm->add_option("--gamma", ibm_gamma, "Mutation-frequency scale in [0, 1]")->check(CLI::Range(0.0, 1.0));
  ibm->add_option("--record", ibm_record, "full | sampled | final")
      ->check(CLI::IsMember({"full", "sampled", "final"}));
  ibm->add_option("--sample-dt", ibm_dt, "Sampling interval")->check(CLI::PositiveNumber);
  ibm->add_option("--init-size", ibm_init, "Initial monomorphic population size")->check(CLI::PositiveNumber);
  ibm->add_option("--x0", ibm_x0, "Initial trait (comma separated)")->delimiter(',');
  ibm->add_option("--burn-in", ibm_burn, "Burn-in for the size histogram (default 10% of the horizon)");
  ibm->add_flag("--full-dump", ibm_dump, "Also write every trait group per record");
  ibm->add_flag("--check-rates", ibm_check, "Recompute all rates after each event");

  // fixation
  auto* fix = app.add_subcommand("fixation", "Fixation probabilities and invasion fitness");
  add_common(fix, common);
  std::optional<double> fix_b, fix_c;
  double fix_lambda = 0, fix_delta = 0, fix_alpha = 0, fix_eps = 0;
  std::vector<double> fix_x, fix_y;
  int fix_n = 1, fix_m = 1;
  std::string fix_method = "lu";
  fix->add_option("--b", fix_b, "Resident birth rate");
  fix->add_option("--c", fix_c, "Resident competition rate");
  fix->add_option("--lambda", fix_lambda, "Selection coefficient lambda");
  fix->add_option("--delta", fix_delta, "Selection coefficient delta");
  fix->add_option("--alpha", fix_alpha, "Selection coefficient alpha");
  fix->add_option("--epsilon", fix_eps, "Selection coefficient epsilon");
  fix->add_option("--x", fix_x, "Resident trait (with --config)")->delimiter(',');
  fix->add_option("--y", fix_y, "Mutant trait (with --config)")->delimiter(',');
  fix->add_option("--n", fix_n, "Initial residents")->check(CLI::NonNegativeNumber);
  fix->add_option("--m", fix_m, "Initial mutants")->check(CLI::NonNegativeNumber);
  fix->add_option("--method", fix_method, "lu | gauss-seidel")->check(CLI::IsMember({"lu", "gauss-seidel"}));

  // invasibility
  auto* inv = app.add_subcommand("invasibility", "Invasibility coefficients, a-coefficients and fitness gradient");
  add_common(inv, common);
  double inv_b = 1.0, inv_c = 1.0;
  int inv_n_total = 0;
  std::vector<double> inv_x;
  inv->add_option("--b", inv_b, "Resident birth rate")->check(CLI::PositiveNumber);
  inv->add_option("--c", inv_c, "Resident competition rate")->check(CLI::PositiveNumber);
  inv->add_option("--N", inv_n_total, "Also report g for total sizes 2..N");
  inv->add_option("--x", inv_x, "Trait for the fitness gradient (with --config)")->delimiter(',');

  // curves
  auto* cur = app.add_subcommand("curves", "a-hat curves as functions of theta");
  add_common(cur, common);
  double cur_lo = 0.5, cur_hi = 40.0, cur_base_c = 1.0;
  int cur_points = 40;
  cur->add_option("--theta-min", cur_lo, "Smallest theta")->check(CLI::PositiveNumber);
  cur->add_option("--theta-max", cur_hi, "Largest theta")->check(CLI::PositiveNumber);
  cur->add_option("--points", cur_points, "Log-spaced grid size")->check(CLI::Range(2, 100000));
  cur->add_option("--base-c", cur_base_c, "Competition rate used for the solves")->check(CLI::PositiveNumber);

  // tss
  auto* tss = app.add_subcommand("tss", "Trait substitution sequence");
  add_common(tss, common);
  double tss_t_end = 100.0, tss_eps = 1.0;
  std::vector<double> tss_x0;
  bool tss_sizes = false;
  tss->add_option("--t-end", tss_t_end, "Horizon")->check(CLI::PositiveNumber);
  tss->add_option("--eps", tss_eps, "Mutation step scale")->check(CLI::PositiveNumber);
  tss->add_option("--x0", tss_x0, "Initial trait")->delimiter(',');
  tss->add_flag("--sizes", tss_sizes, "Emit a stationary size sample per state");

  // diffusion
  auto* dif = app.add_subcommand("diffusion", "Canonical diffusion by Euler-Maruyama");
  add_common(dif, common);
  double dif_dt = 0.01, dif_t_end = 1.0;
  int dif_paths = 1, dif_table_points = 200;
  std::vector<double> dif_z0, dif_ks{1, 10, 100};
  std::string dif_source = "table";
  bool dif_large_k = false;
  dif->add_option("--dt", dif_dt, "Time step")->check(CLI::PositiveNumber);
  dif->add_option("--t-end", dif_t_end, "Horizon")->check(CLI::PositiveNumber);
  dif->add_option("--z0", dif_z0, "Initial trait")->delimiter(',');
  dif->add_option("--paths", dif_paths, "Ensemble size")->check(CLI::PositiveNumber);
  dif->add_option("--source", dif_source, "table | direct")->check(CLI::IsMember({"table", "direct"}));
  dif->add_option("--table-points", dif_table_points, "a-hat table size on [0.05, 40]")->check(CLI::Range(4, 100000));
  dif->add_flag("--large-k", dif_large_k, "Compare the fitness gradient of c/K models with its K -> infinity limit");
  dif->add_option("--k-values", dif_ks, "K values for --large-k")->delimiter(',');

  // verify
  auto* ver = app.add_subcommand("verify", "Run the acceptance checks");
  add_common(ver, common);
  std::vector<int> ver_only;
  ver->add_option("--only", ver_only, "Criterion ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (ibm->parsed()) {
      const lbp::ModelSpec m = require_model(common);
      OutputDir out(common, "ibm", args);
      lbp::SimConfig cfg;
      cfg.gamma = ibm_gamma;
      cfg.t_end = ibm_t_end;
      cfg.seed = common.seed;
      cfg.sample_dt = ibm_dt;
      cfg.check_rates = ibm_check;
      cfg.record = ibm_record == "full"    ? lbp::RecordMode::kFullPath
                   : ibm_record == "final" ? lbp::RecordMode::kFinal
                                           : lbp::RecordMode::kSampled;
      const auto init = lbp::PopulationState::monomorphic(trait_or_origin(ibm_x0, m.dimension(), "--x0"), ibm_init);
      const auto path = lbp::run_ibm(m, cfg, init);
      const auto& last = path.back();
      std::cout << "t_end=" << last.time << " total_size=" << last.total_size() << " num_types=" << last.num_types()
                << " records=" << path.size() << '\n';
      if (out.enabled()) {
        out.write("path.csv", [&](std::ostream& f) { lbp::write_path_csv(f, path); });
        if (ibm_dump) out.write("dump.csv", [&](std::ostream& f) { lbp::write_full_dump_csv(f, path, m.dimension()); });
        if (cfg.record == lbp::RecordMode::kFullPath) {
          const double burn = ibm_burn >= 0.0 ? ibm_burn : 0.1 * ibm_t_end;
          const auto hist = lbp::empirical_size_histogram(path, burn);
          out.write("size_histogram.csv", [&](std::ostream& f) {
            f << std::setprecision(17) << "size,frequency\n";
            for (const auto& [n, w] : hist) f << n << ',' << w << '\n';
          });
        }
      } else {
        lbp::write_path_csv(std::cout, path);
      }
      out.finish({{"t_end", ibm_t_end}, {"gamma", ibm_gamma}, {"record", ibm_record}, {"sample_dt", ibm_dt},
                  {"init_size", ibm_init}});
      return kOk;
    }

    if (fix->parsed()) {
      OutputDir out(common, "fixation", args);
      lbp::FixationOptions opt = common.fixation();
      opt.method = fix_method == "lu" ? lbp::FixationMethod::kSparseLU : lbp::FixationMethod::kGaussSeidel;
      lbp::TwoTypeRates rates;
      if (!common.config.empty()) {
        const lbp::ModelSpec m = require_model(common);
        const auto x = trait_or_origin(fix_x, m.dimension(), "--x");
        const auto y = fix_y.empty() ? x : trait_or_origin(fix_y, m.dimension(), "--y");
        rates = lbp::eval_rates(m, x, y);
      } else {
        if (!fix_b || !fix_c) throw CLI::ValidationError("fixation", "needs --b and --c, or --config");
        rates = lbp::reconstruct_rates({*fix_b, *fix_c, fix_lambda, fix_delta, fix_alpha, fix_eps});
      }
      const double theta = rates.b_x / rates.c_xx;
      opt.min_coverage = std::max({opt.min_coverage, lbp::chi_coverage(theta), 2 * (fix_n + fix_m)});
      const lbp::FixationTable table = lbp::solve_fixation(rates, opt);
      std::cout << std::setprecision(12) << "rates: " << rates.to_string() << '\n'
                << "n_max=" << table.n_max() << " residual=" << table.residual()
                << " trunc_error=" << table.trunc_error() << '\n'
                << "u(" << fix_n << "," << fix_m << ")=" << table.u(fix_n, fix_m) << '\n'
                << "chi=" << lbp::chi(table, theta) << '\n'
                << "chi_neutral=" << lbp::chi_neutral(theta) << '\n';
      out.write("fixation.csv", [&](std::ostream& f) { table.write_csv(f); });
      out.finish({{"n", fix_n}, {"m", fix_m}, {"method", fix_method}});
      return kOk;
    }

    if (inv->parsed()) {
      OutputDir out(common, "invasibility", args);
      const auto d = common.differentiation();
      std::cout << std::setprecision(10);
      if (!common.config.empty()) {
        const lbp::ModelSpec m = require_model(common);
        const auto x = trait_or_origin(inv_x, m.dimension(), "--x");
        inv_b = m.b(x);
        inv_c = m.c(x, x);
        const lbp::ACoefficients a = lbp::a_coefficients(inv_b, inv_c, d);
        const Eigen::VectorXd g = lbp::fitness_gradient(m, x, a);
        std::cout << "fitness_gradient=";
        for (Eigen::Index i = 0; i < g.size(); ++i) std::cout << (i ? "," : "") << g[i];
        std::cout << '\n';
      }
      const lbp::ACoefficients a = lbp::a_coefficients(inv_b, inv_c, d);
      std::cout << "b=" << inv_b << " c=" << inv_c << " theta=" << inv_b / inv_c << '\n'
                << "a_lambda=" << a.lambda << " a_delta=" << a.delta << " a_alpha=" << a.alpha
                << " series_terms=" << a.series_terms << '\n';
      std::vector<lbp::InvasibilityCoefficients> gs;
      if (inv_n_total >= 2) {
        constexpr std::array dirs{lbp::Direction::kLambda, lbp::Direction::kDelta, lbp::Direction::kAlpha,
                                  lbp::Direction::kEpsilon};
        const lbp::SelectionSensitivity sens(inv_b, inv_c, inv_n_total, dirs, d);
        for (int total = 2; total <= inv_n_total; ++total) gs.push_back(sens.coefficients(total));
      }
      auto write_g = [&](std::ostream& f) {
        f << std::setprecision(17) << "N,g_lambda,g_delta,g_alpha,g_epsilon,spread,spread_epsilon\n";
        for (const auto& g : gs) {
          f << g.total_size << ',' << g.g_lambda << ',' << g.g_delta << ',' << g.g_alpha << ',';
          if (g.g_epsilon) f << *g.g_epsilon;
          f << ',' << g.spread << ',' << g.spread_epsilon << '\n';
        }
      };
      if (!gs.empty()) {
        if (out.enabled())
          out.write("g.csv", write_g);
        else
          write_g(std::cout);
      }
      out.finish({{"b", inv_b}, {"c", inv_c}, {"N", inv_n_total}});
      return kOk;
    }

    if (cur->parsed()) {
      if (!(cur_hi > cur_lo)) throw CLI::ValidationError("curves", "--theta-max must exceed --theta-min");
      OutputDir out(common, "curves", args);
      const auto grid = lbp::log_spaced(cur_lo, cur_hi, cur_points);
      const auto curve = lbp::curve_sweep(grid, cur_base_c, common.jobs, common.differentiation());
      if (out.enabled()) {
        out.write("curve.csv", [&](std::ostream& f) { curve.write_csv(f); });
        out.write("fig1.csv", [&](std::ostream& f) { curve.write_fig1_csv(f); });
        out.write("fig2.csv", [&](std::ostream& f) { curve.write_fig2_csv(f); });
      } else {
        curve.write_csv(std::cout);
      }
      out.finish({{"theta_min", cur_lo}, {"theta_max", cur_hi}, {"points", cur_points}, {"base_c", cur_base_c}});
      return kOk;
    }

    if (tss->parsed()) {
      const lbp::ModelSpec m = require_model(common);
      OutputDir out(common, "tss", args);
      lbp::TssOptions opt;
      opt.t_end = tss_t_end;
      opt.seed = common.seed;
      opt.eps = tss_eps;
      opt.emit_sizes = tss_sizes;
      opt.fixation = common.fixation();
      const auto path = lbp::run_tss(m, trait_or_origin(tss_x0, m.dimension(), "--x0"), opt);
      std::cerr << "jumps=" << path.states.size() - 1 << " candidates=" << path.candidates << '\n';
      if (out.enabled())
        out.write("tss.csv", [&](std::ostream& f) { lbp::write_tss_csv(f, path); });
      else
        lbp::write_tss_csv(std::cout, path);
      out.finish({{"t_end", tss_t_end}, {"eps", tss_eps}, {"sizes", tss_sizes}});
      return kOk;
    }

    if (dif->parsed()) {
      const lbp::ModelSpec m = require_model(common);
      OutputDir out(common, "diffusion", args);
      const auto z0 = trait_or_origin(dif_z0, m.dimension(), "--z0");
      if (dif_large_k) {
        const Eigen::VectorXd limit = lbp::large_k_drift(m, z0);
        const Eigen::VectorXd rhs = lbp::cead_rhs(m, z0);
        std::ostringstream csv;
        csv << std::setprecision(17) << "K,component,grad2_chi_K,limit,rel_error,chi_K_neutral,cead_rhs\n";
        for (double k : dif_ks) {
          const lbp::ModelSpec mk = m.with_competition_scaled(k);
          const Eigen::VectorXd g = lbp::fitness_gradient(mk, z0, common.differentiation());
          const double err = (g - limit).norm() / limit.norm();
          for (Eigen::Index i = 0; i < g.size(); ++i) {
            csv << k << ',' << i + 1 << ',' << g[i] << ',' << limit[i] << ',' << err << ','
                << lbp::chi_neutral(mk.theta(z0)) << ',' << rhs[i] << '\n';
          }
        }
        if (out.enabled())
          out.write("large_k.csv", [&](std::ostream& f) { f << csv.str(); });
        else
          std::cout << csv.str();
        out.finish({{"large_k", true}, {"k_values", dif_ks}});
        return kOk;
      }
      lbp::DiffusionConfig cfg;
      cfg.dt = dif_dt;
      cfg.t_end = dif_t_end;
      cfg.seed = common.seed;
      if (dif_source == "table") {
        cfg.source = lbp::CoefficientSource::table(std::make_shared<const lbp::AHatTable>(
            lbp::AHatTable::build(0.05, 40.0, dif_table_points, common.jobs, common.differentiation())));
      } else {
        cfg.source = lbp::CoefficientSource::direct(common.differentiation());
      }
      if (dif_paths == 1) {
        const auto path = lbp::run_diffusion(m, z0, cfg);
        if (out.enabled())
          out.write("diffusion.csv", [&](std::ostream& f) { lbp::write_diffusion_csv(f, path); });
        else
          lbp::write_diffusion_csv(std::cout, path);
      } else {
        const auto ens = lbp::run_ensemble(m, z0, cfg, dif_paths, common.jobs);
        if (out.enabled())
          out.write("ensemble.csv", [&](std::ostream& f) { lbp::write_ensemble_csv(f, ens); });
        else
          lbp::write_ensemble_csv(std::cout, ens);
      }
      out.finish({{"dt", dif_dt}, {"t_end", dif_t_end}, {"paths", dif_paths}, {"source", dif_source},
                  {"table_points", dif_table_points}});
      return kOk;
    }

    if (ver->parsed()) {
      OutputDir out(common, "verify", args);
      lbp::verify::Options opt;
      opt.jobs = common.jobs;
      opt.seed = common.seed;
      const auto reports = lbp::verify::run_criteria(opt, ver_only, std::cout);
      if (reports.empty()) throw CLI::ValidationError("verify", "no criterion matches --only");
      const bool ok = lbp::verify::all_passed(reports);
      out.write("verify.csv", [&](std::ostream& f) {
        f << "criterion,passed,seconds,detail\n";
        for (const auto& r : reports) {
          std::string d = r.detail;
          for (auto pos = d.find('"'); pos != std::string::npos; pos = d.find('"', pos + 2)) d.insert(pos, "\"");
          f << r.id << ',' << (r.passed ? 1 : 0) << ',' << r.seconds << ",\"" << d << "\"\n";
        }
      });
      out.finish({{"only", ver_only}, {"passed", ok}});
      return ok ? kOk : kVerification;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const lbp::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const lbp::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const lbp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
