// Command-line front end: check / find / enlarge / prune / bench / split.
// Exit codes: 0 completed, 1 error, 2 certificate found, 3 feasible point.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "boxcert/exclusion.hpp"

using namespace boxcert;
namespace fs = std::filesystem;

namespace {

std::string read_problem_file(const std::string& path) {
  fs::path p = path;
  if (!fs::exists(p) && fs::exists(path + ".json")) p = path + ".json";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

QuadraticCsp load_problem(const std::string& path) {
  std::vector<std::string> warnings;
  QuadraticCsp csp = parse_problem(read_problem_file(path), {}, &warnings);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return csp;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string box_str(const BoxVec& box) {
  std::string out;
  for (size_t i = 0; i < box.size(); ++i) {
    if (i) out += "x";
    out += "[" + fmt(box[i].lo) + "," + fmt(box[i].hi) + "]";
  }
  return out;
}

std::string point_str(const Eigen::VectorXd& x) {
  std::string out = "(";
  for (int i = 0; i < x.size(); ++i) {
    if (i) out += ",";
    out += fmt(x(i));
  }
  return out + ")";
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << text;
}

BoxVec parse_box_arg(const std::string& s) {
  BoxVec box;
  std::stringstream ss(s);
  std::string tok;
  std::vector<double> vals;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.empty() || vals.size() % 2 != 0)
    throw std::runtime_error("box argument needs lo1,hi1[,lo2,hi2,...]");
  for (size_t i = 0; i < vals.size(); i += 2) box.push_back(Interval(vals[i], vals[i + 1]));
  return box;
}

struct CliConfig {
  std::string problemPath;
  std::string tVariant = "norm-y";
  double rFraction = 0.25;
  double delta = 0.0;  // 0 means half the found certificate value
  int maxIter = 100;
  double tol = 1e-5;
  int seed = 0;
  std::string reportPath;
  bool rigorous = false;

  TChoice tChoice() const {
    TChoice t;
    t.variant = tVariant == "one" ? TChoice::Variant::One : TChoice::Variant::NormY;
    return t;
  }
};

void add_common(CLI::App* cmd, CliConfig& cfg, bool needsProblem = true) {
  if (needsProblem) cmd->add_option("problem", cfg.problemPath, "problem file")->required();
  cmd->add_option("--t", cfg.tVariant, "certificate denominator")
      ->check(CLI::IsMember({"one", "norm-y"}));
  cmd->add_option("--r-fraction", cfg.rFraction, "minimum box width fraction")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--delta", cfg.delta, "enlargement slack (negative)");
  cmd->add_option("--max-iter", cfg.maxIter, "solver iteration limit")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", cfg.tol, "stationarity tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--report", cfg.reportPath, "CSV report path");
  cmd->add_flag("--rigorous", cfg.rigorous, "outward-rounded verification");
}

FindResult run_find(const QuadraticCsp& csp, const CliConfig& cfg, bool fixedBox) {
  FindOptions opts;
  opts.solve.maxIter = cfg.maxIter;
  opts.solve.tol = cfg.tol;
  opts.earlyExitNegative = false;  // converge to a useful certificate value
  opts.rigorousVerify = cfg.rigorous;
  Eigen::VectorXd r(csp.n);
  for (int i = 0; i < csp.n; ++i) r(i) = cfg.rFraction * width(csp.domain[i]);
  return find_exclusion_box(csp, csp.domain, r, cfg.tChoice(), fixedBox, opts);
}

int cmd_check(const CliConfig& cfg) {
  QuadraticCsp csp = load_problem(cfg.problemPath);
  StartResult start = starting_point(csp, {}, cfg.tChoice());
  if (start.feasible) {
    std::printf("FEASIBLE point=%s\n", point_str(start.feasiblePoint).c_str());
    return 3;
  }
  const CertPoint& p = start.point;
  BoxVec box;
  for (int i = 0; i < csp.n; ++i) box.push_back(Interval(p.u(i), p.v(i)));
  std::printf("INFEASIBLE_MIDPOINT z0=%s\n", point_str(p.z).c_str());
  std::printf("start y0=%s box=%s\n", point_str(p.y).c_str(), box_str(box).c_str());
  CertValue cv = f_value(csp, p, box, cfg.tChoice(), cfg.rigorous);
  std::printf("start f=%f Z=%g Y=%g T=%g\n", cv.f, cv.Z, cv.Y, cv.T);
  return 0;
}

int cmd_find(const CliConfig& cfg) {
  QuadraticCsp csp = load_problem(cfg.problemPath);
  FindResult res = run_find(csp, cfg, /*fixedBox=*/true);
  if (res.kind == FindResult::Kind::FeasibleFound) {
    std::printf("FEASIBLE point=%s\n", point_str(res.feasiblePoint).c_str());
    return 3;
  }
  if (res.kind == FindResult::Kind::Excluded) {
    std::printf("EXCLUDED f=%f box=%s\n", res.cert->fValue, box_str(res.cert->box()).c_str());
    return 2;
  }
  std::printf("UNKNOWN f=%f\n", res.report.bestValue);
  return 0;
}

int cmd_enlarge(const CliConfig& cfg) {
  QuadraticCsp csp = load_problem(cfg.problemPath);
  FindOptions fopts;
  fopts.solve.maxIter = cfg.maxIter;
  fopts.solve.tol = cfg.tol;
  fopts.earlyExitNegative = false;
  fopts.start.strictInterior = true;  // leave room to grow
  Eigen::VectorXd r(csp.n);
  for (int i = 0; i < csp.n; ++i) r(i) = cfg.rFraction * width(csp.domain[i]);
  FindResult found = find_exclusion_box(csp, csp.domain, r, cfg.tChoice(), true, fopts);
  if (found.kind == FindResult::Kind::FeasibleFound) {
    std::printf("FEASIBLE point=%s\n", point_str(found.feasiblePoint).c_str());
    return 3;
  }
  if (found.kind != FindResult::Kind::Excluded) {
    std::printf("UNKNOWN f=%f\n", found.report.bestValue);
    return 0;
  }
  double delta = cfg.delta != 0.0 ? cfg.delta : 0.5 * found.cert->fValue;
  EnlargeOptions eopts;
  eopts.solve.inner.maxIter = cfg.maxIter;
  ExclusionCertificate big = enlarge_exclusion_box(csp, *found.cert, delta,
                                                   BoxMeasure::PosL1, eopts);
  auto measure = [&](const ExclusionCertificate& c) {
    return box_measure(BoxMeasure::PosL1, c.u, c.v, csp.domain);
  };
  std::printf("before box=%s f=%f measure=%g\n", box_str(found.cert->box()).c_str(),
              found.cert->fValue, measure(*found.cert));
  std::printf("after  box=%s f=%f measure=%g\n", box_str(big.box()).c_str(), big.fValue,
              measure(big));
  return 2;
}

int cmd_prune(const CliConfig& cfg) {
  QuadraticCsp csp = load_problem(cfg.problemPath);
  PruneBudget budget;
  budget.maxIterPerBox = cfg.maxIter;
  PruneOptions popts;
  popts.rFraction = cfg.rFraction;
  PruneResult res = prune(csp, budget, cfg.tChoice(), popts);
  write_text(cfg.reportPath, emit_report(res.rows, csp.n));
  double excludedVol = 0;
  for (const auto& c : res.excluded) excludedVol += volume(c.box());
  std::fprintf(stderr, "excluded=%zu remaining=%zu feasible=%zu excludedVolume=%g\n",
               res.excluded.size(), res.remaining.size(), res.feasiblePoints.size(),
               excludedVol);
  return 0;
}

int cmd_bench(const CliConfig& cfg) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.problemPath))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("bench: no .json problems in " + cfg.problemPath);

  std::string csv = "problem,status,f,costOne,costNormY,rp\n";
  char buf[128];
  for (const fs::path& f : files) {
    QuadraticCsp csp = load_problem(f.string());
    CliConfig one = cfg;
    one.tVariant = "one";
    CliConfig normy = cfg;
    normy.tVariant = "norm-y";
    FindResult a = run_find(csp, one, true);
    FindResult b = run_find(csp, normy, true);
    const char* status = b.kind == FindResult::Kind::Excluded
                             ? "excluded"
                             : (b.kind == FindResult::Kind::FeasibleFound ? "feasible"
                                                                          : "unknown");
    double fv = b.cert ? b.cert->fValue
                       : (b.kind == FindResult::Kind::FeasibleFound ? 0.0
                                                                    : b.report.bestValue);
    std::snprintf(buf, sizeof(buf), "%s,%s,%.12g,%.12g,%.12g,%.12g\n",
                  f.stem().string().c_str(), status, fv, a.report.cost, b.report.cost,
                  rp_cost(a.report.counters, b.report.counters));
    csv += buf;
  }
  write_text(cfg.reportPath, csv);
  return 0;
}

int cmd_split(const std::string& outerArg, const std::string& innerArg) {
  BoxVec outer = parse_box_arg(outerArg);
  BoxVec inner = parse_box_arg(innerArg);
  for (const BoxVec& piece : split_complement(outer, inner))
    std::printf("%s\n", box_str(piece).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exclusion-box certificates for quadratic CSPs"};
  app.require_subcommand(1);

  CliConfig cfg;
  CLI::App* check = app.add_subcommand("check", "feasibility of the midpoint + start trace");
  add_common(check, cfg);
  CLI::App* find = app.add_subcommand("find", "search for an exclusion certificate");
  add_common(find, cfg);
  CLI::App* enlarge = app.add_subcommand("enlarge", "find, then grow the certified box");
  add_common(enlarge, cfg);
  CLI::App* prune = app.add_subcommand("prune", "worklist prune loop with CSV report");
  add_common(prune, cfg);
  CLI::App* bench = app.add_subcommand("bench", "run a directory of problems");
  add_common(bench, cfg);

  std::string outerArg, innerArg;
  CLI::App* split = app.add_subcommand("split", "complement of inner box inside outer box");
  split->add_option("outer", outerArg, "lo1,hi1[,lo2,hi2,...]")->required();
  split->add_option("inner", innerArg, "lo1,hi1[,lo2,hi2,...]")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(cfg);
    if (find->parsed()) return cmd_find(cfg);
    if (enlarge->parsed()) return cmd_enlarge(cfg);
    if (prune->parsed()) return cmd_prune(cfg);
    if (bench->parsed()) return cmd_bench(cfg);
    if (split->parsed()) return cmd_split(outerArg, innerArg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
