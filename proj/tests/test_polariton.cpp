#include <doctest.h>

#include <cmath>
#include <random>

#include "isbpol/polariton.hpp"

using namespace isbpol;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) out.push_back(lo + i * step);
  return out;
}

// Rows of two Gaussian ridges at fixed energies.
DispersionScan two_ridges(double lo_e, double hi_e, double sigma) {
  DispersionScan s{grid(65.0, 80.0, 1.0), grid(130.0, 200.0, 0.25), {}};
  s.absorptance.resize(static_cast<Eigen::Index>(s.angles.size()), static_cast<Eigen::Index>(s.energies.size()));
  for (std::size_t i = 0; i < s.angles.size(); ++i)
    for (std::size_t j = 0; j < s.energies.size(); ++j) {
      const double e = s.energies[j];
      s.absorptance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.6 * std::exp(-0.5 * std::pow((e - lo_e) / sigma, 2)) + 0.4 * std::exp(-0.5 * std::pow((e - hi_e) / sigma, 2));
    }
  return s;
}

double cavity_model(double angle) { return 163.0 + 4.0 * (angle - 72.3); }

Branches synthetic_branches(const std::vector<double>& angles, double omega, std::vector<std::optional<double>>& cavity,
                            std::mt19937_64* rng = nullptr, double noise = 0.0) {
  std::normal_distribution<double> n(0.0, noise);
  Branches b;
  cavity.clear();
  for (double a : angles) {
    const double ec = cavity_model(a);
    auto [lo, hi] = coupled_energies(ec, 163.0, omega);
    if (rng) {
      lo += n(*rng);
      hi += n(*rng);
    }
    BranchPoint p;
    p.angle = a;
    p.lp = Peak{lo, 1.0, 5.0};
    p.up = Peak{hi, 1.0, 5.0};
    p.flag = BranchFlag::Ok;
    b.push_back(p);
    cavity.emplace_back(ec);
  }
  return b;
}

}  // namespace

TEST_CASE("coupled energies examples") {
  const auto [lo, hi] = coupled_energies(CoupledOscillator{163.0, 163.0, 8.0});
  CHECK(lo == doctest::Approx(155.0).epsilon(1e-14));
  CHECK(hi == doctest::Approx(171.0).epsilon(1e-14));
  const auto [lo2, hi2] = coupled_energies(173.0, 163.0, 8.0);
  CHECK(std::abs(lo2 - (168.0 - std::sqrt(89.0))) < 1e-12);
  CHECK(lo2 == doctest::Approx(158.566).epsilon(1e-5));
  CHECK(hi2 == doctest::Approx(177.434).epsilon(1e-5));
  const auto [lo3, hi3] = coupled_energies(150.0, 163.0, 0.0);
  CHECK(lo3 == 150.0);
  CHECK(hi3 == 163.0);
}

TEST_CASE("coupled energies identities over random inputs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e(50.0, 300.0), w(0.0, 30.0);
  for (int i = 0; i < 100000; ++i) {
    const double ec = e(rng), e12 = i % 100 == 0 ? ec : e(rng), omega = w(rng);
    const auto [lo, hi] = coupled_energies(ec, e12, omega);
    CHECK_MESSAGE(std::abs(lo + hi - (ec + e12)) <= 1e-12 * (ec + e12), i);
    CHECK(hi - lo >= 2.0 * omega - 1e-12 * (ec + e12));
    if (ec == e12) CHECK(std::abs(hi - lo - 2.0 * omega) <= 1e-12 * (ec + e12));
    if (omega > 0.0) {
      CHECK(lo < std::min(ec, e12));
      CHECK(hi > std::max(ec, e12));
    }
  }
}

TEST_CASE("branches from synthetic ridges") {
  const auto b = extract_branches(two_ridges(155.0, 171.0, 3.0));
  for (const auto& p : b) {
    REQUIRE(p.both());
    CHECK(p.flag == BranchFlag::Ok);
    CHECK(std::abs(p.lp->energy - 155.0) < 0.1);
    CHECK(std::abs(p.up->energy - 171.0) < 0.1);
    CHECK(p.lp->width == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0)) * 3.0).epsilon(0.02));
  }
}

TEST_CASE("flat and single-ridge scans are flagged") {
  DispersionScan flat{grid(60.0, 62.0, 1.0), grid(130.0, 140.0, 0.5), {}};
  flat.absorptance = Eigen::MatrixXd::Constant(3, static_cast<Eigen::Index>(flat.energies.size()), 0.2);
  for (const auto& p : extract_branches(flat)) {
    CHECK(p.flag == BranchFlag::NoPeak);
    CHECK_FALSE(p.lp.has_value());
    CHECK_FALSE(p.up.has_value());
  }

  auto single = two_ridges(170.0, 171.0, 3.0);
  for (const auto& p : extract_branches(single, {.reference_energy = 163.0})) {
    CHECK(p.flag == BranchFlag::SinglePeak);
    CHECK(p.up.has_value());
    CHECK_FALSE(p.lp.has_value());
  }
  for (const auto& p : extract_branches(single)) CHECK(p.lp.has_value());
}

TEST_CASE("find_peaks rejects a mismatched row") {
  CHECK_THROWS_AS(find_peaks({1.0, 2.0, 3.0}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK(find_peaks({1.0, 2.0, 3.0}, Eigen::VectorXd::Zero(3)).empty());
}

TEST_CASE("anticrossing fit recovers the coupling") {
  std::vector<std::optional<double>> cavity;
  const auto angles = grid(65.0, 80.0, 15.0 / 19.0);
  REQUIRE(angles.size() == 20);
  const auto b = synthetic_branches(angles, 8.0, cavity);
  const auto fit = fit_anticrossing(b, 163.0, cavity);
  CHECK(std::abs(fit.coupling - 8.0) < 1e-6);
  CHECK(fit.residual_rms < 1e-6);
  CHECK(fit.points == 40);

  const auto free = fit_anticrossing(b, 160.0, cavity, {.fit_transition = true});
  CHECK(std::abs(free.coupling - 8.0) < 1e-6);
  CHECK(std::abs(free.transition - 163.0) < 1e-6);
}

TEST_CASE("anticrossing fit under noise") {
  std::mt19937_64 rng(99);
  std::vector<std::optional<double>> cavity;
  const auto angles = grid(65.0, 80.0, 15.0 / 19.0);
  double worst = 0.0, mean = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = synthetic_branches(angles, 8.0, cavity, &rng, 0.2);
    const double omega = fit_anticrossing(b, 163.0, cavity).coupling;
    worst = std::max(worst, std::abs(omega - 8.0));
    mean += omega / 100.0;
  }
  CHECK(worst < 0.3);
  CHECK(std::abs(mean - 8.0) < 0.05);
}

TEST_CASE("anticrossing fit needs three complete angles") {
  std::vector<std::optional<double>> cavity;
  const auto b = synthetic_branches({70.0, 75.0}, 8.0, cavity);
  try {
    fit_anticrossing(b, 163.0, cavity);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("coupling") != std::string::npos);
  }
  auto three = synthetic_branches({70.0, 72.0, 75.0}, 8.0, cavity);
  cavity[1].reset();
  CHECK_THROWS_AS(fit_anticrossing(three, 163.0, cavity), std::invalid_argument);
  cavity.pop_back();
  CHECK_THROWS_AS(fit_anticrossing(three, 163.0, cavity), std::invalid_argument);
}

TEST_CASE("rabi splitting of a synthetic zero-detuning model") {
  std::vector<std::optional<double>> cavity;
  const auto b = synthetic_branches(grid(60.0, 85.0, 0.5), 8.0, cavity);
  const auto r = rabi_splitting(b);
  CHECK(std::abs(r.splitting - 16.0) < 0.05);
  CHECK(std::abs(r.resonance_angle - 72.3) < 0.1);
  CHECK_FALSE(r.on_boundary);
}

TEST_CASE("rabi splitting flags a boundary minimum") {
  std::vector<std::optional<double>> cavity;
  const auto b = synthetic_branches(grid(76.0, 85.0, 0.5), 8.0, cavity);
  const auto r = rabi_splitting(b);
  CHECK(r.on_boundary);
  CHECK(r.resonance_angle == 76.0);
  CHECK_THROWS_AS(rabi_splitting(Branches(5)), std::invalid_argument);
}

TEST_CASE("dispersion scan axes and consistency") {
  const Stack s = paper_device();
  const auto one = dispersion_scan(s, {72.0}, {163.0});
  CHECK(one.absorptance(0, 0) == absorptance_spectrum(s, 72.0, std::vector<double>{163.0})(0));
  CHECK_THROWS_AS(dispersion_scan(s, {}, {163.0}), std::invalid_argument);
  CHECK_THROWS_AS(dispersion_scan(s, {72.0, 71.0}, {163.0}), std::invalid_argument);
  CHECK_THROWS_AS(dispersion_scan(s, {72.0}, {163.0, 163.0}), std::invalid_argument);
}

TEST_CASE("paper device pipeline") {
  const auto angles = grid(60.0, 85.0, 0.5);
  const auto energies = grid(130.0, 200.0, 0.25);
  const auto a = analyze_dispersion(paper_device(), angles, energies, 163.0);

  CHECK(a.scan.absorptance.minCoeff() >= 0.0);
  CHECK(a.scan.absorptance.maxCoeff() <= 1.0);

  REQUIRE(a.splitting.has_value());
  CHECK(std::abs(a.splitting->splitting - 16.0) <= 4.0);
  CHECK(a.splitting->resonance_angle >= 70.0);
  CHECK(a.splitting->resonance_angle <= 80.0);
  CHECK_FALSE(a.splitting->on_boundary);

  // The cavity sweeps through the whole window; away from resonance one
  // branch leaves it and the remaining peak is classified against 163 meV.
  int both = 0;
  for (const auto& p : a.branches) {
    CAPTURE(p.angle);
    CHECK(p.flag != BranchFlag::NoPeak);
    if (p.lp) CHECK(p.lp->energy < 163.0);
    if (p.up) CHECK(p.up->energy > 163.0);
    if (p.both()) {
      ++both;
      CHECK(p.up->energy - p.lp->energy >= a.splitting->splitting);
    }
  }
  CHECK(both >= 10);
  REQUIRE(a.fit.has_value());
  CHECK(a.fit->coupling > 5.0);
  CHECK(a.fit->coupling < 11.0);
}

TEST_CASE("bare cavity shows one ridge rising with angle") {
  const auto angles = grid(60.0, 85.0, 0.5);
  const auto energies = grid(130.0, 200.0, 0.25);
  const auto bare = dispersion_scan(without_coupling(paper_device()), angles, energies);
  std::optional<double> previous;
  int rows = 0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const auto peaks = find_peaks(energies, bare.absorptance.row(static_cast<Eigen::Index>(i)).transpose());
    CAPTURE(angles[i]);
    CHECK(peaks.size() <= 1);
    if (peaks.empty()) continue;
    ++rows;
    if (previous) CHECK(peaks[0].energy > *previous);
    previous = peaks[0].energy;
  }
  CHECK(rows >= 10);
}

// The two-mode model leaves a few meV of misfit near the grazing angles
// where the cavity is pinned to the substrate light line.
TEST_CASE("anticrossing fit residual on the paper device" * doctest::should_fail()) {
  const auto a = analyze_dispersion(paper_device(), grid(60.0, 85.0, 0.5), grid(130.0, 200.0, 0.25), 163.0);
  REQUIRE(a.fit.has_value());
  CHECK(a.fit->residual_rms < 1.0);
}
