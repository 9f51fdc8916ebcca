#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "btr/metrics.hpp"
#include "btr/synthetic.hpp"
#include "btr/tensor_io.hpp"
#include "btr/tr_model.hpp"

using namespace btr;

namespace {

std::size_t cell_of(const SparseTensor& t, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t d = 0; d < t.order(); ++d) c = c * t.shape()[d] + t.index(n)[d];
  return c;
}

}  // namespace

TEST_CASE("sparse text format round trip") {
  SparseTensor t({3, 4, 2}, DataKind::continuous);
  t.add({0, 0, 0}, -1.5);
  t.add({2, 3, 1}, 0.125);
  t.add({1, 2, 0}, 3.14159265358979);
  std::ostringstream out;
  write_sparse(t, out);
  std::istringstream in(out.str());
  const SparseTensor back = read_sparse(in);
  REQUIRE(back.size() == t.size());
  CHECK(back.shape() == t.shape());
  CHECK(back.kind() == t.kind());
  for (std::size_t n = 0; n < t.size(); ++n) {
    for (std::size_t d = 0; d < 3; ++d) CHECK(back.index(n)[d] == t.index(n)[d]);
    CHECK(back.value(n) == t.value(n));  // exact: round-trip-safe precision
  }
}

TEST_CASE("reader rejects malformed input with line numbers") {
  const auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_sparse(in);
    } catch (const ParseError& e) {
      return e.line;
    }
    return std::size_t(0);
  };
  CHECK(line_of("shape 2 x\nkind continuous\n") == 1);
  CHECK(line_of("shape 2 2\nkind waffles\n1 1 0.5\n") == 2);
  CHECK(line_of("shape 2 2\nkind continuous\n1 1\n") == 3);
  CHECK(line_of("shape 2 2\nkind continuous\n1 3 0.5\n") == 3);   // out of bounds
  CHECK(line_of("shape 2 2\nkind continuous\n0 1 0.5\n") == 3);   // 1-based floor
  CHECK(line_of("shape 2 2\nkind binary\n1 1 2\n") == 3);         // binary domain
  CHECK(line_of("shape 2 2\nkind continuous\n1 1 1\n1 1 2\n") == 4);  // duplicate
  std::istringstream one("shape 9\nkind continuous\n4 -2.5\n");
  CHECK(read_sparse(one).size() == 1);
}

TEST_CASE("synthetic continuous generation") {
  SyntheticSpec spec;
  spec.shape = {10, 10, 10, 10};
  spec.true_rank = 5;
  spec.snr_db = 20.0;
  spec.missing_rate = 0.3;
  spec.seed = 123;
  const SyntheticData out = generate_synthetic(spec);

  SUBCASE("train and test partition the cells") {
    std::set<std::size_t> train, test;
    for (std::size_t n = 0; n < out.train.size(); ++n) train.insert(cell_of(out.train, n));
    for (std::size_t n = 0; n < out.test.size(); ++n) test.insert(cell_of(out.test, n));
    CHECK(train.size() == out.train.size());
    CHECK(test.size() == out.test.size());
    CHECK(train.size() + test.size() == 10000);
    for (std::size_t c : test) CHECK(train.count(c) == 0);
  }
  SUBCASE("missing rate is binomial around its target") {
    CHECK(std::fabs(double(out.test.size()) - 3000.0) < 3.0 * std::sqrt(10000 * 0.3 * 0.7));
  }
  SUBCASE("signal is standardized and the noise hits the requested SNR") {
    // truth holds the raw generating cores; the emitted values carry the
    // standardized signal, so recover the affine map from dense moments.
    const auto dense = reconstruct_dense(out.truth);
    double m = 0.0, v = 0.0;
    for (double x : dense) m += x;
    m /= dense.size();
    for (double x : dense) v += (x - m) * (x - m);
    v /= dense.size();
    const double sd = std::sqrt(v);

    CHECK(out.noise_sigma == doctest::Approx(0.1).epsilon(1e-12));  // 10^(-20/20)
    double noise = 0.0;
    for (std::size_t n = 0; n < out.train.size(); ++n) {
      std::vector<std::size_t> idx(out.train.index(n), out.train.index(n) + 4);
      const double clean = (eval_entry(out.truth, idx) - m) / sd;
      const double e = out.train.value(n) - clean;
      noise += e * e;
    }
    const double snr_db = 10.0 * std::log10(1.0 / (noise / out.train.size()));
    CHECK(std::fabs(snr_db - 20.0) < 0.5);
  }
  SUBCASE("same seed reproduces, different seed does not") {
    const SyntheticData again = generate_synthetic(spec);
    CHECK(again.train.values() == out.train.values());
    spec.seed = 124;
    CHECK(generate_synthetic(spec).train.values() != out.train.values());
  }
}

TEST_CASE("synthetic noiseless flag") {
  SyntheticSpec spec;
  spec.shape = {6, 6, 6};
  spec.true_rank = 2;
  spec.snr_db = std::numeric_limits<double>::infinity();
  spec.missing_rate = 0.2;
  spec.seed = 9;
  const SyntheticData out = generate_synthetic(spec);
  CHECK(out.noise_sigma == 0.0);
  const auto dense = reconstruct_dense(out.truth);
  double m = 0.0, v = 0.0;
  for (double x : dense) m += x;
  m /= dense.size();
  for (double x : dense) v += (x - m) * (x - m);
  const double sd = std::sqrt(v / dense.size());
  for (std::size_t n = 0; n < out.train.size(); ++n) {
    std::vector<std::size_t> idx(out.train.index(n), out.train.index(n) + 3);
    const double clean = (eval_entry(out.truth, idx) - m) / sd;
    CHECK(out.train.value(n) == doctest::Approx(clean).epsilon(1e-10));
  }
}

TEST_CASE("synthetic binary generation") {
  SyntheticSpec spec;
  spec.kind = DataKind::binary;
  spec.shape = {12, 12, 12};
  spec.true_rank = 3;
  spec.missing_rate = 0.4;
  spec.seed = 21;
  const SyntheticData out = generate_synthetic(spec);
  std::size_t ones = 0;
  for (double v : out.train.values()) {
    CHECK((v == 0.0 || v == 1.0));
    ones += v == 1.0;
  }
  // The gain spreads logits, so labels stay informative but not constant.
  CHECK(ones > out.train.size() / 10);
  CHECK(ones < out.train.size() * 9 / 10);

  // Larger gain concentrates probabilities toward {0,1}: the true logits
  // should classify the realized labels almost perfectly.
  std::vector<double> score;
  SparseTensor labels({12, 12, 12}, DataKind::binary);
  for (std::size_t n = 0; n < out.test.size(); ++n) {
    std::vector<std::size_t> idx(out.test.index(n), out.test.index(n) + 3);
    score.push_back(sigmoid(eval_entry(out.truth, idx)));
    labels.add(idx, out.test.value(n));
  }
  const MetricReport rep = compute_metrics(score, labels, 1.0);
  REQUIRE(rep.auc.has_value());
  CHECK(*rep.auc > 0.9);
}

TEST_CASE("sparse generation path agrees with the dense one in moments") {
  SyntheticSpec spec;
  spec.shape = {8, 8, 8, 8, 8};  // 32768 cells; sparse path avoids the dense tensor
  spec.true_rank = 2;
  spec.snr_db = 25.0;
  spec.missing_rate = 0.98;
  spec.seed = 77;
  const SyntheticData out = generate_synthetic_sparse(spec, 600, 100);
  CHECK(out.train.size() == 600);
  double m = 0.0, v = 0.0;
  for (double x : out.train.values()) m += x;
  m /= out.train.size();
  for (double x : out.train.values()) v += (x - m) * (x - m);
  v /= out.train.size();
  // Standardized signal plus SNR-25 noise: mean near 0, variance near 1.
  CHECK(std::fabs(m) < 0.15);
  CHECK(v == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("rank_error formula") {
  CHECK(rank_error({5, 5, 5, 5}, {5, 5, 5, 5}) == 0.0);
  CHECK(rank_error({6, 5, 5, 5}, {5, 5, 5, 5}) == doctest::Approx(0.05));
  CHECK(rank_error({0, 0, 0, 0}, {5, 5, 5, 5}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rank_error({1, 2}, {1, 2, 3}), InputError);
}

TEST_CASE("compute_metrics") {
  SUBCASE("continuous") {
    SparseTensor test({2, 2}, DataKind::continuous);
    test.add({0, 0}, 3.0);
    test.add({1, 1}, 4.0);
    const MetricReport perfect = compute_metrics(std::vector<double>{3.0, 4.0}, test, 5.0);
    CHECK(*perfect.rmse == 0.0);
    CHECK(*perfect.mae == 0.0);
    const MetricReport rep = compute_metrics(std::vector<double>{0.0, 0.0}, test, 5.0);
    CHECK(*rep.rmse == doctest::Approx(std::sqrt(12.5)));
    CHECK(*rep.mae == doctest::Approx(3.5));
    CHECK(*rep.psnr ==
          doctest::Approx(20.0 * std::log10(5.0) - 10.0 * std::log10(12.5)));
    CHECK(!rep.auc.has_value());
  }
  SUBCASE("binary, order statistics") {
    SparseTensor test({4, 1}, DataKind::binary);
    test.add({0, 0}, 1.0);
    test.add({1, 0}, 0.0);
    test.add({2, 0}, 1.0);
    test.add({3, 0}, 0.0);
    const MetricReport rep =
        compute_metrics(std::vector<double>{0.9, 0.2, 0.7, 0.4}, test, 1.0);
    CHECK(*rep.auc == doctest::Approx(1.0));
    CHECK(*rep.acc == doctest::Approx(1.0));
    // AUC only sees the ordering of the scores.
    const MetricReport mono =
        compute_metrics(std::vector<double>{0.99, 0.55, 0.91, 0.6}, test, 1.0);
    CHECK(*mono.auc == doctest::Approx(*rep.auc));
    // Constant predictions are tie-corrected to one half.
    const MetricReport flat =
        compute_metrics(std::vector<double>{0.5, 0.5, 0.5, 0.5}, test, 1.0);
    CHECK(*flat.auc == doctest::Approx(0.5));
    CHECK(*flat.acc == doctest::Approx(0.5));
  }
  SUBCASE("single-class AUC is undefined") {
    SparseTensor test({2, 1}, DataKind::binary);
    test.add({0, 0}, 1.0);
    test.add({1, 0}, 1.0);
    const MetricReport rep = compute_metrics(std::vector<double>{0.6, 0.7}, test, 1.0);
    CHECK(!rep.auc.has_value());
    CHECK(rep.acc.has_value());
  }
  SUBCASE("entry order does not matter") {
    SparseTensor a({3, 1}, DataKind::continuous), b({3, 1}, DataKind::continuous);
    a.add({0, 0}, 1.0);
    a.add({1, 0}, 2.0);
    a.add({2, 0}, 3.0);
    b.add({2, 0}, 3.0);
    b.add({0, 0}, 1.0);
    b.add({1, 0}, 2.0);
    const MetricReport ra = compute_metrics(std::vector<double>{0.0, 0.0, 0.0}, a, 2.0);
    const MetricReport rb = compute_metrics(std::vector<double>{0.0, 0.0, 0.0}, b, 2.0);
    CHECK(*ra.rmse == doctest::Approx(*rb.rmse));
    CHECK(*ra.mae == doctest::Approx(*rb.mae));
  }
  SUBCASE("empty test set") {
    SparseTensor test({2, 2}, DataKind::continuous);
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, test, 1.0), InputError);
  }
  SUBCASE("report text") {
    SparseTensor test({2, 1}, DataKind::continuous);
    test.add({0, 0}, 1.0);
    test.add({1, 0}, -1.0);
    const MetricReport rep = compute_metrics(std::vector<double>{1.0, -1.0}, test, 2.0);
    const std::string text = rep.to_text();
    CHECK(text.find("rmse") != std::string::npos);
    CHECK(text.find("mae") != std::string::npos);
    CHECK(text.find("auc") == std::string::npos);
  }
}

TEST_CASE("SparseTensor validation") {
  SparseTensor t({2, 2}, DataKind::binary);
  t.add({0, 1}, 1.0);
  t.validate();
  t.add({0, 1}, 0.0);
  CHECK_THROWS_AS(t.validate(), InputError);
}
