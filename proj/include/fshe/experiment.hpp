#ifndef FSHE_EXPERIMENT_HPP
#define FSHE_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fshe/config.hpp"
#include "fshe/network.hpp"
#include "fshe/parallel.hpp"
#include "fshe/partition.hpp"
#include "fshe/regularity.hpp"
#include "fshe/she.hpp"
#include "fshe/spectral.hpp"
#include "fshe/stats.hpp"

namespace fshe {

inline constexpr int report_schema_version = 1;

struct Criterion {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<Criterion> criteria;
  std::vector<std::pair<std::string, double>> timings;  // seconds
  std::vector<std::string> artifacts;                   // file names inside config.out
  nlohmann::ordered_json results = nlohmann::ordered_json::object();

  [[nodiscard]] bool all_passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; });
  }
  void check(std::string name, double measured, double threshold, bool passed, std::string detail = "") {
    criteria.push_back({std::move(name), passed, measured, threshold, std::move(detail)});
  }
};

struct RunOptions {
  int threads = 0;
  bool write_reports = true;  // report.json and criteria.csv next to the artifacts
};

enum class ReportFormat { Json, Csv };

namespace detail {

inline nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = c.kind;
  j["structure"] = c.structure ? c.structure->name : c.preset;
  j["level"] = c.level;
  j["bc"] = to_string(c.bc);
  j["alpha"] = c.alpha;
  j["modes"] = c.modes;
  j["t_end"] = c.t_end;
  j["steps"] = c.steps;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["initial"] = c.initial == InitialCondition::Fixed ? "fixed" : "invariant";
  j["u0"] = c.u0;
  j["vertices"] = c.vertices;
  j["record_modes"] = c.record_modes;
  j["text"] = serialize_config(c);
  return j;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write output directory: unable to open '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw OutputError("cannot write output directory: write to '" + path.string() + "' failed");
}

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& report) : report_(report) {}
  template <class F>
  auto operator()(const std::string& phase, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(phase, start);
    } else {
      auto value = f();
      record(phase, start);
      return value;
    }
  }

 private:
  void record(const std::string& phase, std::chrono::steady_clock::time_point start) {
    report_.timings.emplace_back(phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  RunReport& report_;
};

inline bool is_interval_preset(const ExperimentConfig& c) { return !c.structure && c.preset.find("interval") != std::string::npos; }

inline ApproximationNetwork checked_network(const PcfStructure& s, int level, Boundary bc, int max_vertices, const std::string& why) {
  double cells = std::pow(static_cast<double>(s.cells()), level);
  if (cells > 1 << 20) throw ConfigError("level out of range: " + std::to_string(level) + " gives too many cells for " + s.name());
  auto net = build_network(s, level, bc);
  if (net.num_vertices() > max_vertices) {
    throw ConfigError("level out of range: " + std::to_string(net.num_vertices()) + " vertices exceed the " + std::to_string(max_vertices) +
                      " allowed for " + why);
  }
  return net;
}

/// Resolves the truncation: 0 gives `fallback` (a positive count, or -1 for all), -1 all free vertices.
inline int resolve_modes(const ApproximationNetwork& net, Boundary bc, int modes, int fallback) {
  const int free = bc == Boundary::Dirichlet ? net.num_vertices() - static_cast<int>(net.boundary().size()) : net.num_vertices();
  if (modes == 0) modes = fallback;
  if (modes == -1) return free;
  if (modes < 1 || modes > free) {
    throw ConfigError("truncation out of range: modes = " + std::to_string(modes) + " but the network has " + std::to_string(free) +
                      " free vertices");
  }
  return modes;
}

inline int default_modes(const ApproximationNetwork& net, Boundary bc) {
  const int free = bc == Boundary::Dirichlet ? net.num_vertices() - static_cast<int>(net.boundary().size()) : net.num_vertices();
  return std::min(std::max(1, free / 4), 256);
}

inline constexpr int dense_vertex_limit = 4000;

inline void run_verify(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files) {
  const auto s = c.build_structure();
  if (c.level > 10) throw ConfigError("level out of range: verify checks partitions up to level 10");
  const auto harmonic = time("harmonic", [&] { return verify_harmonic_structure(s); });
  report.check("harmonic_structure", harmonic.deviation, 1e-10, harmonic.passed, "max |trace of level-1 network + A0|");
  const auto comb = time("combinatorics", [&] { return combinatorics_check(s, c.level); });
  bool sandwich = true;
  double additivity = 0.0;
  for (const auto& l : comb.levels) {
    sandwich = sandwich && l.sandwich;
    additivity = std::max(additivity, std::abs(l.measure - 1.0));
  }
  report.check("cardinality_sandwich", sandwich ? 1.0 : 0.0, 1.0, sandwich, "2^{d_H n} <= |Lambda_n| < r_min^{-d_H} 2^{d_H n} for n <= level");
  report.check("measure_additivity", additivity, 1e-12, additivity <= 1e-12, "max |sum of cell measures - 1|");
  bool refine = true;
  for (const auto& l : comb.levels)
    if (l.refines_previous) refine = refine && *l.refines_previous;
  report.check("refinement_chain", comb.refinement_checked_to, c.level, refine,
               "checked up to n = " + std::to_string(comb.refinement_checked_to));
  report.check("neighborhood_bound", static_cast<double>(comb.neighborhood_max), static_cast<double>(comb.neighborhood_bound),
               comb.neighborhood_max <= comb.neighborhood_bound, "max |D^1_n(x)| for n <= " + std::to_string(comb.neighborhood_checked_to));

  std::ostringstream csv;
  csv.precision(17);
  csv << "n,count,lower,upper,measure,refines,max_neighborhood\n";
  for (const auto& l : comb.levels) {
    csv << l.level << "," << l.count << "," << l.lower << "," << l.upper << "," << l.measure << ","
        << (l.refines_previous ? (*l.refines_previous ? "1" : "0") : "") << "," << (l.max_neighborhood ? std::to_string(*l.max_neighborhood) : "")
        << "\n";
  }
  files.emplace_back("verify_levels.csv", csv.str());
  report.results["hausdorff_dimension"] = s.hausdorff_dimension();
  report.results["spectral_dimension"] = s.spectral_dim();
  report.results["harmonic_deviation"] = harmonic.deviation;
}

inline void run_spectrum(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files) {
  const auto s = c.build_structure();
  const auto net = time("network", [&] { return checked_network(s, c.level, c.bc, dense_vertex_limit, "dense eigensolves"); });
  const int k = resolve_modes(net, c.bc, c.modes, default_modes(net, c.bc));
  const auto basis = time("eigensolve", [&] { return solve_spectrum(net, c.bc, k); });
  double residual = 0.0;
  for (int i = 0; i < basis.size(); ++i) residual = std::max(residual, basis.residuals[i] / std::max(1.0, basis.eigenvalues[i]));
  report.check("eigen_residual", residual, 1e-8, residual <= 1e-8, "max |C phi - lambda M phi| / (|phi| max(1, lambda))");
  if (c.bc == Boundary::Neumann) {
    // unit mass, so the first eigenfunction is +-1
    const double spread = (basis.eigenvectors.col(0).array().abs() - 1.0).abs().maxCoeff();
    report.check("constant_mode", std::abs(basis.eigenvalues[0]), 1e-9, std::abs(basis.eigenvalues[0]) <= 1e-9 && spread <= 1e-8,
                 "lambda_1; max ||phi_1| - 1| = " + detail::format_double(spread));
  }
  if (is_interval_preset(c)) {
    // continuum eigenvalues (k pi)^2, shifted by the constant mode for Neumann
    const int shift = c.bc == Boundary::Neumann ? 1 : 0;
    const int count = std::min(10, basis.size() - shift);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
      const double exact = std::pow((i + 1) * std::numbers::pi, 2);
      worst = std::max(worst, std::abs(basis.eigenvalues[i + shift] / exact - 1.0));
    }
    report.check("continuum_oracle", worst, 0.01, worst <= 0.01, "max relative error of the first eigenvalues against (k pi)^2");
  }
  if (basis.size() >= 16) {
    const auto w = weyl_fit(basis, s.spectral_dim());
    report.results["weyl"] = {{"k_lo", w.k_lo}, {"k_hi", w.k_hi}, {"min", w.min}, {"max", w.max}, {"window", w.window}, {"spearman", w.spearman}};
  }
  std::ostringstream spectrum, functions;
  write_spectrum_csv(basis, spectrum);
  write_eigenfunctions_csv(basis, std::max(1, c.record_modes), functions);
  files.emplace_back("spectrum.csv", spectrum.str());
  files.emplace_back("eigenfunctions.csv", functions.str());
  report.results["modes"] = basis.size();
  report.results["vertices"] = net.num_vertices();
}

inline void run_resistance(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files) {
  const auto s = c.build_structure();
  const auto net = time("network", [&] { return checked_network(s, c.level, Boundary::Neumann, 1100, "the all-pairs resistance table"); });
  const Eigen::MatrixXd r = time("resistance", [&] { return resistance_matrix(net); });
  const int n = net.num_vertices();

  // F^0 resistances are those of the level-0 network -A0 at every level
  const Eigen::MatrixXd r0 = resistance_matrix(build_network(s, 0));
  const auto& b = net.boundary();
  double boundary_gap = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      boundary_gap = std::max(boundary_gap, std::abs(r(b[i], b[j]) - r0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
  report.check("boundary_resistance", boundary_gap, 1e-10, boundary_gap <= 1e-10, "F^0 resistances against the network -A0");
  report.results["corner_resistance"] = r(b[0], b[1]);

  // sampled triangle inequality
  NormalStream u({c.seed, 0, 0, purpose::pair_sampling});
  double violation = 0.0;
  for (int i = 0; i < 20000 && n >= 3; ++i) {
    const int x = std::min(n - 1, static_cast<int>(u.uniform() * n));
    const int y = std::min(n - 1, static_cast<int>(u.uniform() * n));
    const int z = std::min(n - 1, static_cast<int>(u.uniform() * n));
    violation = std::max(violation, r(x, z) - r(x, y) - r(y, z));
  }
  report.check("triangle_inequality", violation, 1e-10, violation <= 1e-10, "max R(x,z) - R(x,y) - R(y,z) over 20000 sampled triples");

  const auto finer_cells = std::pow(static_cast<double>(s.cells()), c.level + 1);
  if (finer_cells <= 1 << 20) {
    const auto fine = build_network(s, c.level + 1);
    if (fine.num_vertices() <= 4 * dense_vertex_limit) {
      const auto gap = time("cross_level", [&] {
        const ResistanceSolver solver(fine);
        std::vector<int> image(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) image[static_cast<std::size_t>(v)] = fine.vertex(net.complex().representative(v));
        double worst = 0.0;
        for (int x = 0; x < n; ++x) {
          const auto row = solver.from(image[static_cast<std::size_t>(x)]);
          for (int y = 0; y < n; ++y) worst = std::max(worst, std::abs(row[image[static_cast<std::size_t>(y)]] - r(x, y)));
        }
        return worst;
      });
      report.check("cross_level", gap, 1e-10, gap <= 1e-10, "max |R^(m) - R^(m+1)| on level-m vertices");
    }
  }
  if (is_interval_preset(c)) {
    double worst = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) worst = std::max(worst, std::abs(r(x, y) - std::abs(net.position(x) - net.position(y))));
    report.check("interval_oracle", worst, 1e-10, worst <= 1e-10, "max |R(x,y) - |x - y||");
  }
  std::ostringstream csv;
  csv.precision(17);
  csv << "x,y,R\n";
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) csv << x << "," << y << "," << r(x, y) << "\n";
  files.emplace_back("resistance.csv", csv.str());
  report.results["vertices"] = n;
}

inline void run_simulate(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files,
                         int threads) {
  const auto s = c.build_structure();
  const auto net = time("network", [&] { return checked_network(s, c.level, c.bc, dense_vertex_limit, "dense eigensolves"); });
  const int k = resolve_modes(net, c.bc, c.modes, default_modes(net, c.bc));
  const auto basis = time("eigensolve", [&] { return solve_spectrum(net, c.bc, k); });
  SimulationSpec spec;
  spec.alpha = c.alpha;
  spec.times = c.time_grid();
  spec.modes = k;
  spec.initial = c.initial;
  spec.u0 = Eigen::Map<const Eigen::VectorXd>(c.u0.data(), static_cast<Eigen::Index>(c.u0.size()));
  spec.seed = c.seed;
  spec.replicas = c.replicas;
  spec.threads = threads;
  spec.vertices = c.vertices;
  if (spec.vertices.empty())
    for (int v = 0; v < net.num_vertices(); ++v) spec.vertices.push_back(v);
  for (int i = 1; i <= std::min(c.record_modes, k); ++i) spec.coefficients.push_back(i);
  const double cells = static_cast<double>(c.replicas) * static_cast<double>(spec.times.size()) * static_cast<double>(spec.vertices.size());
  if (cells > 2e7) throw ConfigError("simulate output too large: " + std::to_string(static_cast<long long>(cells)) + " field values (limit 2e7)");
  const auto e = time("simulate", [&] {
    try {
      return simulate_ensemble(basis, spec);
    } catch (const DomainError& err) {
      throw ConfigError(err.what());
    }
  });

  if (c.replicas >= 100) {
    // final-time mean and variance at up to 16 recorded vertices against the exact law
    const std::size_t last = e.times.size() - 1;
    const double t = e.times[last];
    Eigen::VectorXd a0 = Eigen::VectorXd::Zero(k);
    a0.head(spec.u0.size()) = spec.u0;
    std::vector<std::pair<double, double>> zs;
    for (std::size_t vi = 0; vi < e.vertices.size() && zs.size() < 16; ++vi) {
      const int x = e.vertices[vi];
      double mean = 0.0, var = 0.0;
      for (int i = 0; i < k; ++i) {
        const double lambda = basis.eigenvalues[i];
        const double p = basis.eigenvectors(x, i);
        const double beta2 = std::pow(1.0 + lambda, -c.alpha);
        if (c.initial == InitialCondition::Invariant) {
          if (lambda < zero_rate) continue;
          var += beta2 / (2.0 * lambda) * p * p;
        } else {
          mean += (lambda < zero_rate ? 1.0 : std::exp(-lambda * t)) * a0[i] * p;
          var += beta2 * ou_variance(lambda, t) * p * p;
        }
      }
      if (!(var > 1e-300)) continue;  // pinned vertex
      const auto m = moments(e.value_sample(last, vi));
      const double n = static_cast<double>(e.replicas);
      zs.emplace_back((m.mean - mean) / std::sqrt(var / n), (m.variance - var) / (var * std::sqrt(2.0 / (n - 1.0))));
    }
    if (!zs.empty()) {
      const double z = bonferroni_z(2 * zs.size());
      double worst = 0.0;
      for (const auto& [zm, zv] : zs) worst = std::max({worst, std::abs(zm), std::abs(zv)});
      report.check("field_moments", worst, z, worst <= z, "max |z| of final-time mean and variance at " + std::to_string(zs.size()) + " vertices");
    }
  }
  std::ostringstream coeffs, field;
  time("export", [&] {
    write_coefficient_csv(e, coeffs);
    write_field_csv(e, field);
  });
  files.emplace_back("coefficients.csv", coeffs.str());
  files.emplace_back("field.csv", field.str());
  report.results["modes"] = k;
}

inline void run_invariant(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files,
                          int threads) {
  const auto s = c.build_structure();
  const auto net = time("network", [&] { return checked_network(s, c.level, c.bc, dense_vertex_limit, "dense eigensolves"); });
  const int k = resolve_modes(net, c.bc, c.modes, default_modes(net, c.bc));
  const auto basis = time("eigensolve", [&] { return solve_spectrum(net, c.bc, k); });
  const int tested = std::min(c.record_modes, c.bc == Boundary::Neumann ? k - 1 : k);
  if (tested < 1) throw ConfigError("record_modes must select at least one coefficient");
  SimulationSpec spec;
  spec.alpha = c.alpha;
  spec.modes = k;
  spec.seed = c.seed;
  spec.replicas = c.replicas;
  spec.threads = threads;
  std::ostringstream csv;
  csv.precision(17);

  if (c.bc == Boundary::Dirichlet) {
    for (int i = 1; i <= tested; ++i) spec.coefficients.push_back(i);
    auto ks_block = [&](const std::string& start, const Ensemble& e) {
      for (int i = 0; i < tested; ++i) {
        const double lambda = basis.eigenvalues[i];
        const double var = std::pow(1.0 + lambda, -c.alpha) / (2.0 * lambda);
        const auto ks = ks_test(e.coefficient_sample(e.times.size() - 1, static_cast<std::size_t>(i)), [var](double x) { return normal_cdf(x, var); });
        report.check("ks_" + start + "_k" + std::to_string(i + 1), ks.p_value, 0.01, ks.p_value >= 0.01,
                     "KS statistic " + std::to_string(ks.statistic));
        report.results["ks"].push_back({{"start", start}, {"k", i + 1}, {"statistic", ks.statistic}, {"p_value", ks.p_value}, {"count", ks.count}});
        csv << start << "," << i + 1 << "," << ks.statistic << "," << ks.p_value << "\n";
      }
    };
    csv << "start,k,statistic,p_value\n";
    report.results["ks"] = nlohmann::ordered_json::array();
    spec.times = {0.0, c.t_end};
    const auto from_zero = time("simulate_from_zero", [&] { return simulate_ensemble(basis, spec); });
    ks_block("zero", from_zero);
    // independent replicas for the stationarity run
    spec.times = {0.0, 1.0};
    spec.initial = InitialCondition::Invariant;
    spec.first_replica = static_cast<std::uint64_t>(c.replicas);
    const auto from_invariant = time("simulate_from_invariant", [&] { return simulate_ensemble(basis, spec); });
    ks_block("invariant", from_invariant);
    files.emplace_back("ks.csv", csv.str());
    return;
  }

  // Neumann: B(t) = X^1_t is a standard Wiener process independent of the rest
  for (int i = 1; i <= tested + 1; ++i) spec.coefficients.push_back(i);
  spec.times = {0.0, c.t_end};
  const double u0_mean = c.u0.empty() ? 0.0 : c.u0.front();
  spec.u0 = Eigen::Map<const Eigen::VectorXd>(c.u0.data(), static_cast<Eigen::Index>(std::min<std::size_t>(c.u0.size(), static_cast<std::size_t>(k))));
  const auto e = time("simulate", [&] { return simulate_ensemble(basis, spec); });
  std::vector<double> b(static_cast<std::size_t>(e.replicas));
  for (int r = 0; r < e.replicas; ++r) b[static_cast<std::size_t>(r)] = e.coefficient(r, 1, 0) - u0_mean;
  const double n = static_cast<double>(e.replicas);
  const auto second = centered_second_moment(b);
  const double z = (second.mean - c.t_end) / (c.t_end * std::sqrt(2.0 / n));
  report.check("wiener_variance", std::abs(z), 3.0, std::abs(z) <= 3.0, "E[B(t)^2] = " + std::to_string(second.mean) + " against t");
  csv << "statistic,k,value\n";
  csv << "wiener_second_moment,1," << second.mean << "\n";
  double worst = 0.0;
  for (int i = 1; i <= tested; ++i) {
    const double corr = pearson(b, e.coefficient_sample(1, static_cast<std::size_t>(i)));
    worst = std::max(worst, std::abs(corr) * std::sqrt(n));
    csv << "correlation," << i + 1 << "," << corr << "\n";
  }
  report.check("wiener_independence", worst, 3.0, worst <= 3.0, "max sqrt(n) |corr(B(t), remainder coefficient k)|");
  report.results["wiener_second_moment"] = second.mean;
  files.emplace_back("decomposition.csv", csv.str());
}

inline void write_moment_table(const MomentTable& t, std::ostream& out) {
  out.precision(17);
  out << "abscissa,second,fourth,second_se,count\n";
  for (const auto& r : t.rows) out << r.abscissa << "," << r.second << "," << r.fourth << "," << r.second_se << "," << r.pairs << "\n";
}

inline void run_holder(const ExperimentConfig& c, RunReport& report, Stopwatch& time, std::vector<std::pair<std::string, std::string>>& files,
                       int threads) {
  if (c.replicas < min_scan_replicas) throw ConfigError("holder needs at least " + std::to_string(min_scan_replicas) + " replicas");
  const auto s = c.build_structure();
  const auto prediction = theoretical_exponents(c.alpha, s.hausdorff_dimension());
  EmpiricalScanSpec scan;
  scan.alpha = c.alpha;
  scan.t = c.t_end;
  scan.replicas = c.replicas;
  scan.seed = c.seed;
  scan.threads = threads;
  std::vector<HolderEstimate> rows;

  // spatial: Neumann network, where the full-basis increment variance is exactly R(x,y)/2 at equilibrium
  const auto neumann = time("network", [&] { return checked_network(s, c.level, Boundary::Neumann, dense_vertex_limit, "dense eigensolves"); });
  scan.modes = resolve_modes(neumann, Boundary::Neumann, c.modes, -1);
  const auto nbasis = time("eigensolve_neumann", [&] { return solve_spectrum(neumann, Boundary::Neumann, scan.modes); });
  MomentTable spatial_table, temporal_table;
  rows.push_back(time("spatial_scan", [&] { return empirical_spatial_exponent(neumann, nbasis, scan, &spatial_table); }));

  const auto net = build_network(s, c.level, c.bc);
  scan.modes = resolve_modes(net, c.bc, c.modes, -1);
  const auto basis = c.bc == Boundary::Neumann && scan.modes == nbasis.size() ? nbasis
                                                                                : time("eigensolve", [&] { return solve_spectrum(net, c.bc, scan.modes); });
  rows.push_back(time("temporal_scan", [&] { return empirical_temporal_exponent(net, basis, scan, &temporal_table); }));
  rows.push_back(analytic_temporal_exponent(basis, c.alpha, s.hausdorff_dimension(), scan.modes));

  const double spatial_gap = std::abs(rows[0].fit.slope - prediction.spatial);
  report.check("spatial_exponent", rows[0].fit.slope, prediction.spatial, spatial_gap <= 0.1, "RMS increment slope against R, tolerance 0.1");
  const double temporal_gap = std::abs(rows[1].fit.slope - prediction.temporal);
  report.check("temporal_exponent", rows[1].fit.slope, prediction.temporal, temporal_gap <= 0.05, "RMS increment slope against h, tolerance 0.05");
  const double analytic_gap = std::abs(rows[2].fit.slope - prediction.temporal_moment);
  report.check("temporal_analytic_exponent", rows[2].fit.slope, prediction.temporal_moment, analytic_gap <= 0.05,
               "slope of the averaged stationary variance, tolerance 0.05");

  std::ostringstream exponents, spatial, temporal;
  write_exponent_csv(rows, exponents);
  write_moment_table(spatial_table, spatial);
  write_moment_table(temporal_table, temporal);
  files.emplace_back("exponents.csv", exponents.str());
  files.emplace_back("moments_spatial.csv", spatial.str());
  files.emplace_back("moments_temporal.csv", temporal.str());
  report.results["prediction"] = {{"delta", prediction.delta},
                                  {"spatial", prediction.spatial},
                                  {"temporal", prediction.temporal},
                                  {"temporal_moment", prediction.temporal_moment},
                                  {"d_s", prediction.d_s}};
}

}  // namespace detail

/// report.json (versioned schema) or criteria.csv inside `dir`; returns the path written.
inline std::filesystem::path emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& dir) {
  if (format == ReportFormat::Csv) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "criterion,passed,measured,threshold,detail\n";
    for (const auto& c : report.criteria)
      csv << c.name << "," << (c.passed ? 1 : 0) << "," << c.measured << "," << c.threshold << "," << detail::csv_quote(c.detail) << "\n";
    const auto path = dir / "criteria.csv";
    detail::write_text(path, csv.str());
    return path;
  }
  nlohmann::ordered_json j;
  j["schema"] = "fshe-run-report";
  j["schema_version"] = report_schema_version;
  j["config"] = detail::config_json(report.config);
  j["all_passed"] = report.all_passed();
  j["criteria"] = nlohmann::ordered_json::array();
  for (const auto& c : report.criteria) {
    j["criteria"].push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"threshold", c.threshold}, {"detail", c.detail}});
  }
  j["timings"] = nlohmann::ordered_json::object();
  for (const auto& [phase, seconds] : report.timings) j["timings"][phase] = seconds;
  j["artifacts"] = report.artifacts;
  j["results"] = report.results;
  const auto path = dir / "report.json";
  std::string text;
  try {
    text = j.dump(2);
  } catch (const nlohmann::json::exception& e) {
    throw OutputError(std::string("report serialization failed: ") + e.what());
  }
  detail::write_text(path, text + "\n");
  return path;
}

/// Runs one configured experiment and writes its CSV artifacts (and reports) into config.out.
inline RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  validate(config);
  RunReport report;
  report.config = config;
  const std::filesystem::path dir(config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw OutputError("cannot write output directory '" + config.out + "': " + (ec ? ec.message() : "not a directory"));
  }
  const int threads = resolve_threads(options.threads);
  detail::Stopwatch time(report);
  std::vector<std::pair<std::string, std::string>> files;
  if (config.kind == "verify") detail::run_verify(config, report, time, files);
  else if (config.kind == "spectrum") detail::run_spectrum(config, report, time, files);
  else if (config.kind == "resistance") detail::run_resistance(config, report, time, files);
  else if (config.kind == "simulate") detail::run_simulate(config, report, time, files, threads);
  else if (config.kind == "invariant") detail::run_invariant(config, report, time, files, threads);
  else if (config.kind == "holder") detail::run_holder(config, report, time, files, threads);
  for (const auto& [name, content] : files) {
    detail::write_text(dir / name, content);
    report.artifacts.push_back(name);
  }
  if (options.write_reports) {
    report.artifacts.push_back("criteria.csv");
    report.artifacts.push_back("report.json");
    emit_report(report, ReportFormat::Csv, dir);
    emit_report(report, ReportFormat::Json, dir);
  }
  return report;
}

}  // namespace fshe

#endif  // FSHE_EXPERIMENT_HPP
