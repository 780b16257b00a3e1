#include "jeval/simulation.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jeval/errors.hpp"
#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"
#include "synth.hpp"

namespace jeval {

namespace {

// Generator counter domains (per dataset seed).
constexpr std::uint32_t kDomCouple = 0;
constexpr std::uint32_t kDomSharedU = 1;
constexpr std::uint32_t kDomLatentA = 2;
constexpr std::uint32_t kDomLatentB = 3;
constexpr std::uint32_t kDomJudgeA = 4;
constexpr std::uint32_t kDomJudgeB = 5;
constexpr std::uint32_t kDomCalZA = 6;
constexpr std::uint32_t kDomCalJudgeA = 7;
constexpr std::uint32_t kDomCalZB = 8;
constexpr std::uint32_t kDomCalJudgeB = 9;

// Salts separating the per-replication dataset seeds, the per-cell bootstrap
// seeds, and the per-grid-point cell seeds.
constexpr std::uint64_t kSaltCellData = 0x63656c6c2d64ull;
constexpr std::uint64_t kSaltCellBoot = 0x63656c6c2d62ull;
constexpr std::uint64_t kSaltSweepCell = 0x7377656570ull;

void check_rate(double q, const char* what) {
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidRatesError(std::string(what) +
                            " outside [0,1]: " + std::to_string(q));
}

EstimatorConfig cell_config(SimEstimator e) {
  EstimatorConfig c;
  switch (e) {
    case SimEstimator::naive:
      c.estimator = Estimator::naive;
      break;
    case SimEstimator::rg_shared:
      c.estimator = Estimator::rg;
      c.design = CalibrationDesign::shared;
      c.incumbent = "A";
      break;
    case SimEstimator::rg_2x:
      c.estimator = Estimator::rg;
      break;
    case SimEstimator::ppi_1x:
      c.estimator = Estimator::ppi;
      c.budget = Budget::one_x;
      break;
    case SimEstimator::ppi_2x:
      c.estimator = Estimator::ppi;
      break;
  }
  return c;
}

void put_num(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  os << buf;
}

}  // namespace

JudgeErrorRates SimulationConfig::effective_rates_a() const {
  if (!symmetric_rates) return rates_a;
  const double q = (j_a + 1.0) / 2.0;
  return {q, q};
}

JudgeErrorRates SimulationConfig::effective_rates_b() const {
  if (!symmetric_rates) return rates_b;
  const double q = (j_b + 1.0) / 2.0;
  return {q, q};
}

void SimulationConfig::validate() const {
  if (!(theta_a >= 0.0 && theta_a <= 1.0))
    throw ValidationError("theta_a outside [0,1]");
  if (!(theta_b() >= 0.0 && theta_b() <= 1.0))
    throw ValidationError("theta_a + delta_theta outside [0,1]");
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho outside [0,1)");
  if (symmetric_rates) {
    if (!(j_a >= -1.0 && j_a <= 1.0))
      throw InvalidRatesError("j_a implies error rates outside [0,1]");
    if (!(j_b >= -1.0 && j_b <= 1.0))
      throw InvalidRatesError("j_b implies error rates outside [0,1]");
  } else {
    check_rate(rates_a.q0, "rates_a.q0");
    check_rate(rates_a.q1, "rates_a.q1");
    check_rate(rates_b.q0, "rates_b.q0");
    check_rate(rates_b.q1, "rates_b.q1");
  }
  if (n_test < 1) throw ValidationError("n_test must be >= 1");
  if (n_cal < 2) throw ValidationError("n_cal must be >= 2");
  if (mc_reps < 1) throw ValidationError("mc_reps must be >= 1");
  plan.validate();
}

EvalDataset gen_comparison(const SimulationConfig& config, std::uint64_t seed) {
  config.validate();
  const std::uint64_t s = derive_seed(seed, synth::kSaltSimGen);
  const kernels::Ops& k = kernels::ops();
  const std::size_t n = std::size_t(config.n_test);
  const std::size_t m = std::size_t(config.n_cal);
  const JudgeErrorRates ra = config.effective_rates_a();
  const JudgeErrorRates rb = config.effective_rates_b();

  // All four word arrays are drawn unconditionally so a rho change does not
  // reshuffle the independent draws.
  std::vector<std::uint32_t> couple(n), shared_u(n), ua(n), ub(n);
  k.fill_u32(s, stream_id(kDomCouple, 0), couple.data(), n);
  k.fill_u32(s, stream_id(kDomSharedU, 0), shared_u.data(), n);
  k.fill_u32(s, stream_id(kDomLatentA, 0), ua.data(), n);
  k.fill_u32(s, stream_id(kDomLatentB, 0), ub.data(), n);

  const std::uint64_t cut_rho = kernels::bernoulli_cutoff(config.rho);
  const std::uint64_t cut_a = kernels::bernoulli_cutoff(config.theta_a);
  const std::uint64_t cut_b = kernels::bernoulli_cutoff(config.theta_b());

  std::vector<std::uint8_t> za(n), zb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool coupled = std::uint64_t(couple[i]) < cut_rho;
    const std::uint64_t wa = coupled ? shared_u[i] : ua[i];
    const std::uint64_t wb = coupled ? shared_u[i] : ub[i];
    za[i] = wa < cut_a ? 1 : 0;
    zb[i] = wb < cut_b ? 1 : 0;
  }

  std::vector<std::uint32_t> scratch;
  std::vector<std::uint8_t> zha(n), zhb(n);
  synth::judge_labels(za, ra, s, stream_id(kDomJudgeA, 0), scratch, zha);
  synth::judge_labels(zb, rb, s, stream_id(kDomJudgeB, 0), scratch, zhb);

  EvalDataset ds;
  ds.judge_id = "sim";
  ds.arms.resize(2);

  ModelArm& a = ds.arms[0];
  a.model_id = "A";
  a.test.model_id = "A";
  a.test.scores.assign(zha.begin(), zha.end());
  a.calibration.model_id = "A";
  a.calibration.z_true.resize(m);
  k.fill_bernoulli(s, stream_id(kDomCalZA, 0), cut_a,
                   a.calibration.z_true.data(), m);
  a.calibration.z_judge.resize(m);
  synth::judge_labels(a.calibration.z_true, ra, s, stream_id(kDomCalJudgeA, 0),
                      scratch, a.calibration.z_judge);

  ModelArm& b = ds.arms[1];
  b.model_id = "B";
  b.test.model_id = "B";
  b.test.scores.assign(zhb.begin(), zhb.end());
  b.calibration.model_id = "B";
  b.calibration.z_true.resize(m);
  k.fill_bernoulli(s, stream_id(kDomCalZB, 0), cut_b,
                   b.calibration.z_true.data(), m);
  b.calibration.z_judge.resize(m);
  synth::judge_labels(b.calibration.z_true, rb, s, stream_id(kDomCalJudgeB, 0),
                      scratch, b.calibration.z_judge);

  return ds;
}

const char* sim_estimator_name(SimEstimator e) {
  switch (e) {
    case SimEstimator::naive:
      return "naive";
    case SimEstimator::rg_shared:
      return "rg_shared";
    case SimEstimator::rg_2x:
      return "rg_2x";
    case SimEstimator::ppi_1x:
      return "ppi_1x";
    case SimEstimator::ppi_2x:
      return "ppi_2x";
  }
  return "?";
}

const char* sweep_axis_name(SweepAxis axis) {
  return axis == SweepAxis::j_a ? "j_a" : "delta_j_sim";
}

namespace {

// Cell identity without the MC accumulators; also used for the all-failure
// rows that sweep() emits for invalid grid points.
SimulationSummary cell_frame(const SimulationConfig& config) {
  SimulationSummary out;
  out.theta_a = config.theta_a;
  out.theta_b = config.theta_b();
  out.true_delta = config.theta_a - config.theta_b();
  out.j_a = youden(config.effective_rates_a());
  out.j_b = youden(config.effective_rates_b());
  out.delta_j = out.j_a - out.j_b;
  return out;
}

}  // namespace

SimulationSummary run_cell(const SimulationConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.mc_reps < 100)
    throw ValidationError("run_cell needs mc_reps >= 100");

  SimulationSummary out = cell_frame(config);

  struct Acc {
    double bias = 0.0, cover = 0.0, width = 0.0;
    std::int64_t fail = 0, used = 0;
  };
  std::array<Acc, kSimEstimators.size()> acc{};

  std::array<EstimatorConfig, kSimEstimators.size()> configs;
  for (std::size_t ei = 0; ei < kSimEstimators.size(); ++ei)
    configs[ei] = cell_config(kSimEstimators[ei]);

  for (std::int64_t rep = 0; rep < config.mc_reps; ++rep) {
    const EvalDataset ds =
        gen_comparison(config, derive_seed(seed, kSaltCellData,
                                           std::uint64_t(rep)));
    for (std::size_t ei = 0; ei < kSimEstimators.size(); ++ei) {
      BootstrapPlan plan = config.plan;
      plan.seed = derive_seed(seed, kSaltCellBoot + ei, std::uint64_t(rep));
      try {
        const EstimateResult r =
            bootstrap_compare(ds, "A", "B", configs[ei], plan);
        Acc& a = acc[ei];
        a.bias += r.point - out.true_delta;
        if (r.ci_lo <= out.true_delta && out.true_delta <= r.ci_hi)
          a.cover += 1.0;
        a.width += r.ci_hi - r.ci_lo;
        ++a.used;
      } catch (const DegenerateJError&) {
        ++acc[ei].fail;
      } catch (const MissingClassError&) {
        ++acc[ei].fail;
      }
    }
  }

  for (std::size_t ei = 0; ei < kSimEstimators.size(); ++ei) {
    EstimatorCellSummary& c = out.cells[ei];
    c.failures = acc[ei].fail;
    c.reps_used = acc[ei].used;
    c.coverage = acc[ei].cover / double(config.mc_reps);
    if (acc[ei].used > 0) {
      c.mean_bias = acc[ei].bias / double(acc[ei].used);
      c.mean_ci_width = acc[ei].width / double(acc[ei].used);
    }
  }
  return out;
}

std::vector<SimulationSummary> sweep(SweepAxis axis,
                                     std::span<const double> grid,
                                     const SimulationConfig& base,
                                     std::uint64_t seed) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  if (!base.symmetric_rates)
    throw ValidationError(
        "sweep axes are parameterized by J and need symmetric_rates");

  const double gap = base.j_b - base.j_a;
  std::vector<SimulationSummary> out;
  out.reserve(grid.size());
  for (const double v : grid) {
    SimulationConfig c = base;
    if (axis == SweepAxis::j_a) {
      c.j_a = v;
      c.j_b = v + gap;
    } else {
      c.j_b = base.j_a + v;
    }
    // Seeded by grid value, not position: adding a point leaves the rest
    // byte-identical.
    const std::uint64_t cell_seed =
        derive_seed(seed, kSaltSweepCell + std::uint64_t(axis),
                    std::bit_cast<std::uint64_t>(v));
    SimulationSummary s;
    try {
      s = run_cell(c, cell_seed);
    } catch (const InvalidRatesError&) {
      // cell_frame would re-derive the impossible rates; fill the frame from
      // the requested J values instead.
      s.theta_a = c.theta_a;
      s.theta_b = c.theta_b();
      s.true_delta = c.theta_a - c.theta_b();
      s.j_a = c.j_a;
      s.j_b = c.j_b;
      s.delta_j = c.j_a - c.j_b;
      for (EstimatorCellSummary& cell : s.cells) cell.failures = c.mc_reps;
    }
    s.axis_value = v;
    out.push_back(std::move(s));
  }
  return out;
}

void write_sweep_csv(std::ostream& os,
                     std::span<const SimulationSummary> rows) {
  os << "axis_value,estimator,bias,coverage,ci_width,failures\n";
  for (const SimulationSummary& row : rows) {
    for (std::size_t ei = 0; ei < kSimEstimators.size(); ++ei) {
      const EstimatorCellSummary& c = row.cells[ei];
      put_num(os, row.axis_value);
      os << ',' << sim_estimator_name(kSimEstimators[ei]) << ',';
      put_num(os, c.mean_bias);
      os << ',';
      put_num(os, c.coverage);
      os << ',';
      put_num(os, c.mean_ci_width);
      os << ',' << c.failures << '\n';
    }
  }
}

std::string sweep_csv(std::span<const SimulationSummary> rows) {
  std::ostringstream os;
  write_sweep_csv(os, rows);
  return os.str();
}

namespace {

using nlohmann::json;

double num_field(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw SchemaError(std::string("sweep config: ") + key +
                      " must be a number");
  return j[key].get<double>();
}

std::int64_t int_field(const json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw SchemaError(std::string("sweep config: ") + key +
                      " must be an integer");
  return j[key].get<std::int64_t>();
}

JudgeErrorRates rates_field(const json& j, const char* key) {
  const json& r = j[key];
  if (!r.is_object() || !r.contains("q0") || !r.contains("q1") ||
      !r["q0"].is_number() || !r["q1"].is_number())
    throw SchemaError(std::string("sweep config: ") + key +
                      " must be an object {\"q0\":..., \"q1\":...}");
  return {r["q0"].get<double>(), r["q1"].get<double>()};
}

}  // namespace

SweepSpec parse_sweep_spec(std::istream& is) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sweep config: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("sweep config must be a JSON object");

  static const char* const known[] = {
      "axis",   "grid",  "theta_a", "delta_theta", "j_a",
      "j_b",    "rho",   "n_test",  "n_cal",       "mc_reps",
      "boot",   "alpha", "pooling_reps", "workers", "rates_a",
      "rates_b"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok)
      throw SchemaError("sweep config: unknown key \"" + item.key() + "\"");
  }

  SweepSpec spec;
  if (j.contains("axis")) {
    if (!j["axis"].is_string())
      throw SchemaError("sweep config: axis must be a string");
    const std::string a = j["axis"].get<std::string>();
    if (a == "j_a")
      spec.axis = SweepAxis::j_a;
    else if (a == "delta_j_sim")
      spec.axis = SweepAxis::delta_j_sim;
    else
      throw SchemaError("sweep config: axis must be \"j_a\" or "
                        "\"delta_j_sim\"");
  }

  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty())
    throw SchemaError("sweep config: grid must be a non-empty array");
  for (const json& v : j["grid"]) {
    if (!v.is_number())
      throw SchemaError("sweep config: grid entries must be numbers");
    spec.grid.push_back(v.get<double>());
  }

  SimulationConfig& c = spec.config;
  c.theta_a = num_field(j, "theta_a", c.theta_a);
  c.delta_theta = num_field(j, "delta_theta", c.delta_theta);
  c.j_a = num_field(j, "j_a", c.j_a);
  c.j_b = num_field(j, "j_b", c.j_b);
  c.rho = num_field(j, "rho", c.rho);
  c.n_test = int_field(j, "n_test", c.n_test);
  c.n_cal = int_field(j, "n_cal", c.n_cal);
  c.mc_reps = int_field(j, "mc_reps", c.mc_reps);
  c.plan.iterations = int_field(j, "boot", c.plan.iterations);
  c.plan.alpha = num_field(j, "alpha", c.plan.alpha);
  c.plan.pooling_reps = int(int_field(j, "pooling_reps", c.plan.pooling_reps));
  c.plan.workers = int(int_field(j, "workers", c.plan.workers));

  const bool has_a = j.contains("rates_a"), has_b = j.contains("rates_b");
  if (has_a != has_b)
    throw SchemaError("sweep config: rates_a and rates_b must be given "
                      "together");
  if (has_a) {
    c.symmetric_rates = false;
    c.rates_a = rates_field(j, "rates_a");
    c.rates_b = rates_field(j, "rates_b");
  }

  c.validate();
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open sweep config: " + path);
  return parse_sweep_spec(is);
}

}  // namespace jeval
