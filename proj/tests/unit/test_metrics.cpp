#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>

#include "finite_diff.hpp"
#include "ganinf/errors.hpp"
#include "ganinf/log.hpp"
#include "ganinf/metrics/evaluation.hpp"
#include "ganinf/metrics/frechet.hpp"
#include "ganinf/metrics/inception.hpp"
#include "ganinf/metrics/kde.hpp"
#include "ganinf/train/schedule.hpp"

using namespace ganinf;
using ad::Tensor;
using ganinf::testing::central_gradient;
using ganinf::testing::relative_error;
using ganinf::testing::uniform_vector;

namespace {

MetricSpec spec_of(MetricKind k, double bandwidth = 1.0)
{
    MetricSpec s;
    s.kind = k;
    s.bandwidth = bandwidth;
    return s;
}

Tensor random_set(std::size_t n, std::size_t d, std::mt19937_64& rng, double spread = 1.0)
{
    std::normal_distribution<double> nd(0.0, spread);
    std::vector<double> v(n * d);
    for (auto& x : v) x = nd(rng);
    return {{n, d}, v};
}

// Direct double loop without log-sum-exp.
double naive_all(const Tensor& real, const Tensor& gen, double h)
{
    const double d = static_cast<double>(real.cols());
    double total = 0.0;
    for (std::size_t r = 0; r < real.rows(); ++r) {
        double dens = 0.0;
        for (std::size_t m = 0; m < gen.rows(); ++m) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < real.cols(); ++c) d2 += std::pow(real(r, c) - gen(m, c), 2);
            dens += std::pow(2.0 * std::numbers::pi * h * h, -d / 2.0) * std::exp(-d2 / (2.0 * h * h));
        }
        total += std::log(dens / static_cast<double>(gen.rows()));
    }
    return total / static_cast<double>(real.rows());
}

// Gradient of a set function by central differences over every entry.
Tensor set_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps)
{
    auto flat = central_gradient(
        [&](std::span<const double> v) { return f(Tensor(x.shape(), std::vector<double>(v.begin(), v.end()))); },
        x.data(), eps);
    return {x.shape(), flat};
}

// Points whose sample mean is mu and unbiased sample covariance is exactly sigma (2-D).
Tensor exact_moments(std::array<double, 2> mu, std::array<double, 3> sigma /* s11, s12, s22 */)
{
    // Whitened base: +-a e1, +-a e2 has covariance (2 a^2 / 3) I for n = 4.
    const double a = std::sqrt(1.5);
    const double l11 = std::sqrt(sigma[0]);
    const double l21 = sigma[1] / l11;
    const double l22 = std::sqrt(sigma[2] - l21 * l21);
    std::vector<std::array<double, 2>> base = {{a, 0}, {-a, 0}, {0, a}, {0, -a}};
    std::vector<double> v;
    for (auto [y1, y2] : base) {
        v.push_back(mu[0] + l11 * y1);
        v.push_back(mu[1] + l21 * y1 + l22 * y2);
    }
    return {{4, 2}, v};
}

// Closed-form Frechet distance between 2-D Gaussians. For a 2x2 matrix A with
// positive eigenvalues, Tr sqrt(A) = sqrt(tr A + 2 sqrt(det A)).
double gaussian_frechet(std::array<double, 2> m1, std::array<double, 3> s1, std::array<double, 2> m2,
                        std::array<double, 3> s2)
{
    const double a11 = s1[0] * s2[0] + s1[1] * s2[1];
    const double a12 = s1[0] * s2[1] + s1[1] * s2[2];
    const double a21 = s1[1] * s2[0] + s1[2] * s2[1];
    const double a22 = s1[1] * s2[1] + s1[2] * s2[2];
    const double tr_sqrt = std::sqrt(a11 + a22 + 2.0 * std::sqrt(a11 * a22 - a12 * a21));
    const double dm = std::pow(m1[0] - m2[0], 2) + std::pow(m1[1] - m2[1], 2);
    return dm + s1[0] + s1[2] + s2[0] + s2[2] - 2.0 * tr_sqrt;
}

Tensor two_blobs(std::size_t n, std::mt19937_64& rng, std::vector<std::uint32_t>& labels)
{
    std::normal_distribution<double> nd(0.0, 0.3);
    std::vector<double> v;
    labels.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t c = static_cast<std::uint32_t>(i % 2);
        v.push_back((c ? 1.0 : -1.0) + nd(rng));
        v.push_back((c ? 1.0 : -1.0) + nd(rng));
        labels.push_back(c);
    }
    return {{n, 2}, v};
}

}  // namespace

TEST_CASE("ALL: closed-form one-dimensional cases")
{
    Tensor zero({1, 1}, 0.0);
    const double c = -0.5 * std::log(2.0 * std::numbers::pi);
    CHECK(average_log_likelihood(zero, zero, 1.0) == doctest::Approx(c).epsilon(1e-15));
    CHECK(c == doctest::Approx(-0.9189385332).epsilon(1e-10));
    Tensor one({1, 1}, 1.0);
    CHECK(average_log_likelihood(one, zero, 1.0) == doctest::Approx(c - 0.5).epsilon(1e-15));
    Tensor two({1, 1}, 2.0);
    CHECK(average_log_likelihood(two, zero, 2.0) == doctest::Approx(c - std::log(2.0) - 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(average_log_likelihood(Tensor({0, 1}, 0.0), zero, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(average_log_likelihood(zero, zero, 0.0), std::invalid_argument);
}

TEST_CASE("ALL: log-sum-exp matches the naive double loop")
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        auto real = random_set(8, 2, rng);
        auto gen = random_set(8, 2, rng);
        const double h = 0.5 + 0.25 * rep;
        CHECK(std::abs(average_log_likelihood(real, gen, h) - naive_all(real, gen, h)) <=
              1e-10 * std::abs(naive_all(real, gen, h)));
    }
    // Far-away points underflow the naive form but not the stable one.
    Tensor far({1, 2}, 60.0);
    Tensor origin({1, 2}, 0.0);
    CHECK(std::isfinite(average_log_likelihood(far, origin, 1.0)));
}

TEST_CASE("ALL: gradient matches finite differences and vanishes for a remote sample")
{
    std::mt19937_64 rng(2);
    auto real = random_set(10, 2, rng);
    auto gen = random_set(6, 2, rng);
    auto got = average_log_likelihood_gradient(real, gen, 0.8);
    auto fd = set_gradient([&](const Tensor& g) { return average_log_likelihood(real, g, 0.8); }, gen, 1e-6);
    CHECK(relative_error(got.data(), fd.data()) < 1e-7);

    // One generated point far from the data while another sits on it.
    Tensor g2({2, 2}, std::vector<double>{0.0, 0.0, 25.0, 25.0});
    auto grad = average_log_likelihood_gradient(real, g2, 1.0);
    CHECK(std::hypot(grad(1, 0), grad(1, 1)) <= 1e-6);
    auto fd2 = set_gradient([&](const Tensor& g) { return average_log_likelihood(real, g, 1.0); }, g2, 1e-6);
    CHECK(std::hypot(fd2(1, 0), fd2(1, 1)) <= 1e-6);
}

TEST_CASE("IS: analytic posteriors and a direct KL oracle")
{
    Tensor uniform({20, 4}, 0.25);
    CHECK(inception_score_from_posteriors(uniform) == doctest::Approx(1.0).epsilon(1e-12));
    Tensor onehot({30, 10}, 0.0);
    for (std::size_t i = 0; i < 30; ++i) onehot(i, i % 10) = 1.0;
    CHECK(std::abs(inception_score_from_posteriors(onehot) - 10.0) <= 1e-9);

    std::mt19937_64 rng(3);
    Tensor mixed({12, 5});
    for (std::size_t i = 0; i < 12; ++i) {
        auto w = uniform_vector(5, rng, 0.0, 1.0);
        if (i % 4 == 0) w[2] = 0.0;  // exercises 0 log 0
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t c = 0; c < 5; ++c) mixed(i, c) = w[c] / s;
    }
    // mean KL(p_m || p) = mean_m sum p log p - sum pbar log pbar
    double neg_entropy = 0.0;
    std::vector<double> pbar(5, 0.0);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t c = 0; c < 5; ++c) {
            if (mixed(i, c) > 0) neg_entropy += mixed(i, c) * std::log(mixed(i, c)) / 12.0;
            pbar[c] += mixed(i, c) / 12.0;
        }
    double marg = 0.0;
    for (double p : pbar) marg += p * std::log(p);
    const double is = inception_score_from_posteriors(mixed);
    CHECK(is == doctest::Approx(std::exp(neg_entropy - marg)).epsilon(1e-12));
    CHECK(is >= 1.0);
    CHECK(is <= 5.0);
    CHECK_THROWS_AS(inception_score_from_posteriors(Tensor({0, 3}, 0.0)), std::invalid_argument);
}

TEST_CASE("IS: gradient through the classifier")
{
    std::mt19937_64 rng(4);
    Classifier clf(2, 3, 5, 4);
    clf.initialize(9);
    auto p = std::vector<double>(clf.parameters().begin(), clf.parameters().end());
    for (auto& v : p) v += 0.5 * std::normal_distribution<double>()(rng);
    clf.set_parameters(p);
    auto x = random_set(6, 2, rng);
    auto got = inception_score_gradient(x, clf);
    auto fd = set_gradient([&](const Tensor& g) { return inception_score(g, clf); }, x, 1e-6);
    CHECK(relative_error(got.data(), fd.data()) < 1e-6);

    Classifier flat(2, 3, 5, 4);  // all-zero parameters: constant uniform head
    auto zero = inception_score_gradient(x, flat);
    for (double v : zero.data()) CHECK(v == 0.0);
    CHECK(inception_score(x, flat) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("FID: identical sets, point masses and closed-form Gaussians")
{
    std::mt19937_64 rng(5);
    auto a = random_set(50, 3, rng);
    FidDiagnostics diag;
    CHECK(fid(a, a, &diag) <= 1e-8);

    auto p = exact_moments({0.0, 0.0}, {1.0, 0.0, 1.0});
    auto q = exact_moments({3.0, -1.0}, {1.0, 0.0, 1.0});
    CHECK(fid(p, q) == doctest::Approx(10.0).epsilon(1e-12));

    std::array<double, 2> m1{1.0, 2.0}, m2{-0.5, 0.3};
    std::array<double, 3> s1{2.0, 0.6, 1.0}, s2{0.5, -0.2, 1.5};
    auto x1 = exact_moments(m1, s1);
    auto x2 = exact_moments(m2, s2);
    const double oracle = gaussian_frechet(m1, s1, m2, s2);
    CHECK(std::abs(fid(x1, x2) - oracle) <= 1e-6 * oracle);

    // Symmetric and non-negative.
    auto b = random_set(40, 3, rng, 2.0);
    CHECK(fid(a, b) == doctest::Approx(fid(b, a)).epsilon(1e-9));
    CHECK(fid(a, b) >= 0.0);
    CHECK_THROWS_AS(fid(Tensor({1, 2}, 0.0), p), std::invalid_argument);
    CHECK_THROWS_AS(fid(a, p), ShapeError);
}

TEST_CASE("FID: increases with the size of a shift")
{
    std::mt19937_64 rng(6);
    auto base = random_set(200, 2, rng);
    double prev = -1.0;
    for (double s : {0.1, 0.5, 2.0}) {
        Tensor shifted = base;
        for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, 0) += s;
        const double v = fid(base, shifted);
        CHECK(v > prev);
        CHECK(v == doctest::Approx(s * s).epsilon(1e-8));
        prev = v;
    }
}

TEST_CASE("FID: singular covariances are clipped and reported")
{
    // Rank-one sets: all points on a line.
    Tensor line({5, 2}, std::vector<double>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4});
    Tensor line2({5, 2}, std::vector<double>{0, 0, 1, -1, 2, -2, 3, -3, 4, -4});
    FidDiagnostics diag;
    const double v = fid(line, line2, &diag);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(diag.most_negative_eigenvalue > -1e-6);
}

TEST_CASE("FID: gradient matches finite differences, including identical sets")
{
    std::mt19937_64 rng(7);
    auto real = random_set(12, 3, rng);
    auto gen = random_set(9, 3, rng, 1.5);
    auto got = fid_gradient(real, gen);
    auto fd = set_gradient([&](const Tensor& g) { return fid(real, g); }, gen, 1e-5);
    CHECK(relative_error(got.data(), fd.data()) < 1e-4);

    auto same = fid_gradient(real, real);
    auto fd_same = set_gradient([&](const Tensor& g) { return fid(real, g); }, real, 1e-5);
    // At the minimum the gradient is tiny; compare absolutely at FD resolution.
    CHECK(testing::max_abs(same.data()) < 1e-8);
    CHECK(testing::max_abs(fd_same.data()) < 1e-4);
}

TEST_CASE("classifier: training, determinism and persistence")
{
    std::mt19937_64 rng(8);
    std::vector<std::uint32_t> labels;
    auto x = two_blobs(200, rng, labels);
    ClassifierConfig cfg;
    cfg.epochs = 20;
    auto a = train_classifier(x, labels, 2, cfg, 3);
    auto b = train_classifier(x, labels, 2, cfg, 3);
    CHECK(a.training_accuracy > 0.95);
    CHECK(std::vector<double>(a.classifier.parameters().begin(), a.classifier.parameters().end()) ==
          std::vector<double>(b.classifier.parameters().begin(), b.classifier.parameters().end()));

    auto post = a.classifier.posteriors(x);
    for (std::size_t i = 0; i < post.rows(); ++i) CHECK(std::abs(post(i, 0) + post(i, 1) - 1.0) <= 1e-12);
    CHECK(a.classifier.features(x).cols() == 32);

    cfg.epochs = 0;
    auto init = train_classifier(x, labels, 2, cfg, 3);
    auto p0 = init.classifier.posteriors(x);
    for (double v : p0.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    auto stem = std::filesystem::temp_directory_path() / "ganinf_clf";
    a.classifier.save(stem);
    auto back = Classifier::load(stem);
    CHECK(back.posteriors(x) == post);
    CHECK_THROWS_AS(Classifier::load(std::filesystem::temp_directory_path() / "ganinf_none"), TraceError);
    std::vector<std::uint32_t> bad(labels);
    bad[0] = 7;
    CHECK_THROWS_AS(train_classifier(x, bad, 2, cfg, 3), std::invalid_argument);
}

TEST_CASE("metric spec: harmfulness orientation")
{
    std::vector<double> scores = {3.0, -1.0, 2.0};
    auto order = [&](MetricKind k) {
        MetricSpec s = spec_of(k);
        std::vector<std::size_t> idx = {0, 1, 2};
        std::stable_sort(idx.begin(), idx.end(),
                         [&](auto i, auto j) { return harmfulness(s, scores[i]) > harmfulness(s, scores[j]); });
        return idx;
    };
    CHECK(order(MetricKind::ALL) == std::vector<std::size_t>{0, 2, 1});
    CHECK(order(MetricKind::IS) == std::vector<std::size_t>{0, 2, 1});
    CHECK(order(MetricKind::FID) == std::vector<std::size_t>{1, 2, 0});
    CHECK(order(MetricKind::DISC_LOSS) == std::vector<std::size_t>{1, 2, 0});
    CHECK(spec_of(MetricKind::FID).better_sign() == -1);
    CHECK(parse_metric_kind("fid") == MetricKind::FID);
    CHECK_THROWS_AS(parse_metric_kind("bleu"), ConfigError);
    MetricSpec bad = spec_of(MetricKind::ALL, 0.0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("query vector: ALL matches finite differences on a desk-size model")
{
    GanModel model(GanArchitecture{});
    auto theta = model.initialize(21).vector();
    auto z = regenerate_latents(5, 1000, 10);
    std::mt19937_64 rng(10);
    auto real = random_set(1000, 2, rng);
    MetricSpec spec = spec_of(MetricKind::ALL, 1.0);
    MetricContext ctx{&real, nullptr};
    auto u = build_query_vector(spec, model, theta, z, ctx);
    for (std::size_t i = model.generator_size(); i < u.size(); ++i) CHECK(u[i] == 0.0);

    std::vector<std::size_t> coords;
    std::uniform_int_distribution<std::size_t> pick(0, model.generator_size() - 1);
    for (int i = 0; i < 20; ++i) coords.push_back(pick(rng));
    std::vector<double> got, fd;
    for (auto c : coords) {
        auto tp = theta, tm = theta;
        const double eps = 1e-6;
        tp[c] += eps;
        tm[c] -= eps;
        fd.push_back((evaluate_metric(spec, model, tp, z, ctx) - evaluate_metric(spec, model, tm, z, ctx)) / (2 * eps));
        got.push_back(u[c]);
    }
    CHECK(relative_error(got, fd) < 1e-4);
}

TEST_CASE("query vector: constant and rescaled metrics, discriminator-loss baseline")
{
    GanArchitecture arch;
    arch.latent_dim = 3;
    arch.gen_hidden = 6;
    arch.disc_hidden = 6;
    GanModel model(arch);
    auto theta = model.initialize(4).vector();
    auto z = regenerate_latents(8, 20, 3);
    std::mt19937_64 rng(11);
    auto real = random_set(15, 2, rng);

    Tensor zero({20, 2}, 0.0);
    for (double v : query_from_sample_gradients(model, theta, z, zero)) CHECK(v == 0.0);

    MetricSpec all = spec_of(MetricKind::ALL, 1.0);
    MetricContext ctx{&real, nullptr};
    auto w = metric_gradient_wrt_generated(all, model.generate(theta, z), ctx);
    auto u = query_from_sample_gradients(model, theta, z, w);
    Tensor w3 = w;
    for (std::size_t i = 0; i < w3.size(); ++i) w3[i] *= 3.0;
    auto u3 = query_from_sample_gradients(model, theta, z, w3);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u3[i] == doctest::Approx(3.0 * u[i]).epsilon(1e-13));

    MetricSpec dl = spec_of(MetricKind::DISC_LOSS);
    auto ud = build_query_vector(dl, model, theta, z, ctx);
    auto fd = central_gradient([&](std::span<const double> t) { return evaluate_metric(dl, model, t, z, ctx); }, theta,
                               1e-6);
    CHECK(relative_error(ud, fd) < 1e-6);
    CHECK(testing::max_abs(std::span<const double>(ud).first(model.generator_size())) > 0.0);
    CHECK(testing::max_abs(std::span<const double>(ud).subspan(model.generator_size())) > 0.0);

    // FID on raw samples and IS through a classifier, both chained through G.
    MetricSpec fs = spec_of(MetricKind::FID);
    auto uf = build_query_vector(fs, model, theta, z, ctx);
    auto fdf = central_gradient([&](std::span<const double> t) { return evaluate_metric(fs, model, t, z, ctx); },
                                std::span<const double>(theta), 1e-6);
    fdf.resize(model.generator_size());
    CHECK(relative_error(std::span<const double>(uf).first(model.generator_size()), fdf) < 1e-4);

    Classifier clf(2, 3, 5, 4);
    clf.initialize(2);
    auto cp = std::vector<double>(clf.parameters().begin(), clf.parameters().end());
    for (auto& v : cp) v += 0.3;
    clf.set_parameters(cp);
    MetricContext cctx{&real, &clf};
    MetricSpec is = spec_of(MetricKind::IS);
    auto ui = build_query_vector(is, model, theta, z, cctx);
    auto fdi = central_gradient([&](std::span<const double> t) { return evaluate_metric(is, model, t, z, cctx); },
                                std::span<const double>(theta), 1e-6);
    fdi.resize(model.generator_size());
    CHECK(relative_error(std::span<const double>(ui).first(model.generator_size()), fdi) < 1e-4);

    auto ufc = build_query_vector(fs, model, theta, z, cctx);
    auto fdfc = central_gradient([&](std::span<const double> t) { return evaluate_metric(fs, model, t, z, cctx); },
                                 std::span<const double>(theta), 1e-6);
    fdfc.resize(model.generator_size());
    CHECK(relative_error(std::span<const double>(ufc).first(model.generator_size()), fdfc) < 1e-4);
}
