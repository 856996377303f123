#include <doctest.h>
#include <random>


#include "ecgbench/error.hpp"
#include "ecgbench/signal.hpp"

using namespace ecgbench;

namespace {

// Brute-force run scan: every maximal run of ones, kept when long enough.
std::vector<std::pair<Eigen::Index, Eigen::Index>> runs_oracle(const ValidityMask& m,
                                                               Eigen::Index min_len) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  Eigen::Index i = 0, n = static_cast<Eigen::Index>(m.size());
  while (i < n) {
    if (!m[i]) { ++i; continue; }
    Eigen::Index j = i;
    while (j < n && m[j]) ++j;
    if (j - i >= min_len) out.emplace_back(i, j - i);
    i = j;
  }
  return out;
}

}  // namespace

TEST_CASE("all-valid recording is one episode") {
  auto rec = make_recording(Signal::Zero(2560), 256, "S01", 2);
  auto eps = split_clean_episodes(rec, 1.0);
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].start == 0);
  CHECK(eps[0].length == 2560);
  CHECK(eps[0].subject_id == "S01");
  CHECK(eps[0].day_index == 2);
}

TEST_CASE("all-invalid recording has no episodes") {
  auto rec = make_recording(Signal::Zero(2560), 256);
  std::fill(rec.validity.begin(), rec.validity.end(), 0);
  CHECK(split_clean_episodes(rec, 1.0).empty());
}

TEST_CASE("short second run is dropped") {
  auto rec = make_recording(Signal::Zero(3000), 256);
  std::fill(rec.validity.begin(), rec.validity.end(), 0);
  std::fill(rec.validity.begin(), rec.validity.begin() + 1000, 1);
  std::fill(rec.validity.begin() + 2000, rec.validity.begin() + 2500, 1);
  auto eps = split_clean_episodes(rec, 2.0);
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].start == 0);
  CHECK(eps[0].end() == 1000);
}

TEST_CASE("episodes match run-length oracle on random masks") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto rec = make_recording(Signal::Zero(5000), 100);
    // runs of random lengths
    std::size_t i = 0;
    bool v = rng() % 2;
    while (i < rec.validity.size()) {
      std::size_t len = 1 + rng() % 700;
      for (std::size_t k = i; k < std::min(i + len, rec.validity.size()); ++k) rec.validity[k] = v;
      i += len;
      v = !v;
    }
    const double min_s = 0.5 + (rng() % 50) / 10.0;
    auto eps = split_clean_episodes(rec, min_s);
    auto expect = runs_oracle(rec.validity, static_cast<Eigen::Index>(std::ceil(min_s * 100 - 1e-9)));
    REQUIRE(eps.size() == expect.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
      CHECK(eps[e].start == expect[e].first);
      CHECK(eps[e].length == expect[e].second);
    }
  }
}

TEST_CASE("mask length mismatch is rejected") {
  auto rec = make_recording(Signal::Zero(100), 256);
  rec.validity.pop_back();
  CHECK_THROWS_AS(check_well_formed(rec), Error);
  CHECK_THROWS_AS(split_clean_episodes(rec), Error);
}

TEST_CASE("episode samples are a copy of the slice") {
  Signal x = Signal::LinSpaced(100, 0, 99);
  auto rec = make_recording(x, 10);
  Episode ep{"", 0, 20, 30, 10};
  Signal s = episode_samples(rec, ep);
  CHECK(s.size() == 30);
  CHECK(s[0] == 20);
  CHECK(s[29] == 49);
}
