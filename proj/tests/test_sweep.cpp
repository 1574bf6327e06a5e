#include <cmath>
#include <sstream>

#include <doctest.h>

#include "optosqz/sweep.hpp"

using namespace optosqz;
using doctest::Approx;

namespace {

RunConfig reference_config(RunMode mode) {
  RunConfig c;
  c.mode = mode;
  c.base.omega_m = 3.0;
  c.base.delta = 1.5;
  c.base.g_eff_mag = 0.05;
  c.base.r = 1.0;
  return c;
}

std::string csv_text(const RunConfig& config, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  write_sweep_csv(out, config, rows);
  return out.str();
}

}  // namespace

TEST_CASE("run modes and sweep specs") {
  for (auto m : {RunMode::kPoint, RunMode::kSweepDetuning, RunMode::kOptimizeDs,
                 RunMode::kOracleCheck, RunMode::kFig2}) {
    CHECK(parse_run_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_run_mode("plot"), ConfigError);

  const auto axis = parse_sweep_spec("delta", "0.5:2.5:81");
  CHECK(axis.start == 0.5);
  CHECK(axis.stop == 2.5);
  CHECK(axis.count == 81);
  CHECK(axis.value(0) == 0.5);
  CHECK(axis.value(40) == Approx(1.5));
  CHECK(axis.value(80) == 2.5);
  CHECK_THROWS_AS(parse_sweep_spec("delta", "0.5:2.5"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("delta", "a:2:3"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("delta", "0:1:2.5"), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig c = reference_config(RunMode::kSweepDetuning);
  c.sweep = parse_sweep_spec("delta", "1:1:5");
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.sweep = parse_sweep_spec("delta", "1:2:1");
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.sweep = parse_sweep_spec("omega_m", "1:2:5");
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.sweep = parse_sweep_spec("banana", "1:2:5");
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.sweep = parse_sweep_spec("delta", "1:2:5");
  CHECK_NOTHROW(validate(c));
  c.kappa_hz = -3.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("config documents use the flag names") {
  RunConfig c;
  const auto doc = nlohmann::json::parse(R"({"omega-m": 2.5, "g_eff": 0.07, "delta-s": 2.4,
      "r": 0.3, "kappa-hz": 196000, "sweep": "0.5:1.5:11", "out": "x.csv", "mode": "point"})");
  apply_config_json(doc, c);
  CHECK(c.base.omega_m == 2.5);
  CHECK(c.base.g_eff_mag == 0.07);
  CHECK(c.base.delta_s == 2.4);
  CHECK_FALSE(c.optimize_ds);
  CHECK(c.base.r == 0.3);
  CHECK(*c.kappa_hz == 196000.0);
  CHECK(c.sweep->count == 11);
  CHECK(c.output_path == "x.csv");

  RunConfig bad;
  CHECK_THROWS_AS(apply_config_json(nlohmann::json::parse(R"({"mass": 1})"), bad), ConfigError);
  CHECK_THROWS_AS(apply_config_json(nlohmann::json::parse(R"({"r": "big"})"), bad), ConfigError);
  CHECK_THROWS_AS(apply_config_json(nlohmann::json::parse("[1, 2]"), bad), ConfigError);

  SystemParams p;
  set_param_field(p, "gamma_m", 0.25);
  CHECK(get_param_field(p, "gamma-m") == 0.25);
}

TEST_CASE("single points") {
  const auto row = run_point(reference_config(RunMode::kPoint));
  REQUIRE(row.observables);
  CHECK(row.observables->n_st == Approx(1.395).epsilon(0.01 / 1.395));
  CHECK(row.observables->var_min == Approx(0.08).epsilon(0.01 / 0.08));

  RunConfig vac = reference_config(RunMode::kPoint);
  vac.base.r = 0.0;
  const auto v = run_point(vac);
  CHECK(v.observables->n_st == Approx(0.0025).epsilon(0.01));
  CHECK(v.observables->var_min == Approx(0.5).epsilon(0.01));

  RunConfig off = reference_config(RunMode::kPoint);
  off.base.g_eff_mag = 0.0;
  try {
    run_point(off);
    FAIL("expected InstabilityError");
  } catch (const InstabilityError& e) {
    CHECK(std::string(e.what()).find("no unique steady state") != std::string::npos);
  }

  RunConfig fixed = reference_config(RunMode::kPoint);
  fixed.optimize_ds = false;
  fixed.base.delta_s = 2.99;
  CHECK(run_point(fixed).delta_s == 2.99);
}

TEST_CASE("detuning sweep rows") {
  RunConfig c = reference_config(RunMode::kSweepDetuning);
  c.sweep = parse_sweep_spec("delta", "-2:2.5:10");
  const auto table = run_sweep_detuning(c);
  REQUIRE(table.rows.size() == 10);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].swept_value > table.rows[i - 1].swept_value);
  }
  bool saw_unstable = false;
  for (const auto& row : table.rows) {
    CHECK(row.params.delta == row.swept_value);
    if (!row.stable) {
      saw_unstable = true;
      CHECK_FALSE(row.observables);
      CHECK(row.error.find("unstable") != std::string::npos);
    }
  }
  CHECK(saw_unstable);  // blue-detuned points are unstable

  RunConfig g = reference_config(RunMode::kSweepDetuning);
  g.sweep = parse_sweep_spec("delta", "0.5:2.5:81");
  const auto fig = run_sweep_detuning(g);
  REQUIRE(fig.summary.argmin_n_st);
  CHECK(std::abs(*fig.summary.argmin_n_st - 1.5) <= 0.025 + 1e-12);
}

TEST_CASE("CSV output is deterministic and round-trips") {
  RunConfig c = reference_config(RunMode::kSweepDetuning);
  c.sweep = parse_sweep_spec("delta", "0.7:2.3:9");
  c.kappa_hz = 196e3;
  const auto rows = run_sweep_detuning(c).rows;
  const std::string first = csv_text(c, rows);
  const std::string second = csv_text(c, run_sweep_detuning(c).rows);
  CHECK(first == second);

  std::istringstream in(first);
  const auto table = read_csv(in);
  CHECK(table.header == sweep_columns());
  CHECK_FALSE(table.comments.empty());
  REQUIRE(table.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& cells = table.rows[i];
    REQUIRE(cells.size() == sweep_columns().size());
    CHECK(std::stod(cells[0]) == rows[i].swept_value);
    CHECK(std::stod(cells[1]) == rows[i].observables->n_st);
    CHECK(std::stod(cells[2]) == rows[i].observables->var_min);
    CHECK(std::stod(cells[7]) == rows[i].delta_s);
    CHECK(std::stod(cells[8]) == Approx(rows[i].delta_s * 196e3));
    CHECK(std::stod(cells[14]) == rows[i].params.g_eff_mag);
  }
  CHECK(format_number(0.1).size() == std::string("1.0000000000000001e-01").size());
}

TEST_CASE("coupling/detuning reproduction tables") {
  RunConfig c;
  c.mode = RunMode::kFig2;
  c.sweep = parse_sweep_spec("delta", "0.5:2.5:21");
  const auto result = run_fig2(c);
  REQUIRE(result.couplings.size() == 4);

  std::ostringstream a, b;
  write_fig2_csv(a, c, result, Fig2Panel::kPhononNumber);
  write_fig2_csv(b, c, result, Fig2Panel::kVarMin);
  std::istringstream ia(a.str()), ib(b.str());
  const auto pa = read_csv(ia);
  const auto pb = read_csv(ib);
  CHECK(pa.header == std::vector<std::string>{"delta", "n_st_G0.1", "n_st_G0.2", "n_st_G0.3",
                                              "n_st_G0.4"});
  CHECK(pb.header.at(1) == "var_min_G0.1");
  REQUIRE(pa.rows.size() == 21);
  const auto& mid_a = pa.rows[10];
  const auto& mid_b = pb.rows[10];
  CHECK(std::stod(mid_a[0]) == Approx(1.5));
  CHECK(std::stod(mid_a[1]) == Approx(1.395).epsilon(0.01 / 1.395));
  CHECK(std::stod(mid_b[1]) == Approx(0.08).epsilon(0.01 / 0.08));
  for (const auto& row : pb.rows) {
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k].empty()) continue;
      CHECK(std::stod(row[k]) >= std::exp(-2.0) / 2.0 - 1e-6);
    }
  }
}

TEST_CASE("oracle check") {
  SUBCASE("no squeezing: three-way agreement") {
    RunConfig c = reference_config(RunMode::kOracleCheck);
    c.base.r = 0.0;
    c.fock.dim_cavity = 6;
    c.fock.dim_mirror = 8;
    const auto rep = run_oracle_check(c);
    REQUIRE(rep.backends.size() == 3);
    for (const auto& b : rep.backends) {
      CAPTURE(b.backend);
      CAPTURE(b.error);
      CHECK(b.ok);
      CHECK(b.pass);
    }
    CHECK(rep.all_pass);
  }
  SUBCASE("r = 0.2") {
    RunConfig c = reference_config(RunMode::kOracleCheck);
    c.base.r = 0.2;
    c.fock.dim_cavity = 6;
    c.fock.dim_mirror = 8;
    const auto rep = run_oracle_check(c);
    for (const auto& b : rep.backends) {
      CAPTURE(b.backend);
      CAPTURE(b.error);
      CHECK(b.pass);
    }
    CHECK(rep.backends[2].compared_f2);
  }
  SUBCASE("unstable point") {
    RunConfig c = reference_config(RunMode::kOracleCheck);
    c.base.delta = -1.5;
    c.base.g_eff_mag = 0.2;
    c.base.r = 0.0;
    c.optimize_ds = false;
    const auto rep = run_oracle_check(c);
    for (const auto& b : rep.backends) {
      CAPTURE(b.backend);
      CHECK(b.unstable);
      CHECK_FALSE(b.pass);
    }
    CHECK_FALSE(rep.all_pass);
  }
  SUBCASE("large squeezing skips the Fock backend") {
    RunConfig c = reference_config(RunMode::kOracleCheck);
    c.base.g_eff_mag = 0.15;
    const auto rep = run_oracle_check(c);
    CHECK(rep.backends[2].error.find("skipped") != std::string::npos);
    CHECK(rep.backends[1].pass);
  }
}
