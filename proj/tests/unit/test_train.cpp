#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "ganinf/errors.hpp"
#include "ganinf/train/hashing.hpp"
#include "ganinf/train/trace_io.hpp"
#include "ganinf/train/trainer.hpp"

using namespace ganinf;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

Tensor gaussian_data(std::size_t n, std::size_t d, std::uint64_t seed)
{
    auto v = standard_normals(seed, n * d);
    for (auto& x : v) x = 0.5 * x + 1.0;
    return {{n, d}, v};
}

GanArchitecture tiny_arch()
{
    GanArchitecture a;
    a.latent_dim = 3;
    a.gen_hidden = 6;
    a.disc_hidden = 6;
    return a;
}

TrainingConfig tiny_cfg()
{
    TrainingConfig c;
    c.epochs = 2;
    c.batch_size = 8;
    c.lr_generator = 1e-2;
    c.lr_discriminator = 1e-2;
    return c;
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("ganinf_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("schedule: partitions each epoch and covers every index K times")
{
    auto s = minibatch_schedule(4, 2, 1, 9);
    REQUIRE(s.size() == 2);
    std::vector<std::uint32_t> all(s[0]);
    all.insert(all.end(), s[1].begin(), s[1].end());
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::uint32_t>{0, 1, 2, 3});

    CHECK(minibatch_schedule(50, 7, 3, 1) == minibatch_schedule(50, 7, 3, 1));
    CHECK(minibatch_schedule(50, 7, 3, 1) != minibatch_schedule(50, 7, 3, 2));

    auto big = minibatch_schedule(1000, 100, 5, 3);
    CHECK(big.size() == 50);
    std::vector<int> counts(1000, 0);
    for (std::size_t t = 0; t < big.size(); ++t) {
        CHECK(big[t].size() == 100);
        for (auto i : big[t]) ++counts[i];
    }
    CHECK(std::all_of(counts.begin(), counts.end(), [](int c) { return c == 5; }));
    // Each epoch is its own permutation.
    for (std::size_t k = 0; k < 5; ++k) {
        std::vector<int> seen(1000, 0);
        for (std::size_t t = 10 * k; t < 10 * (k + 1); ++t)
            for (auto i : big[t]) ++seen[i];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
    CHECK(big[0] != big[10]);
}

TEST_CASE("schedule: short final batch and boundaries")
{
    auto s = minibatch_schedule(10, 4, 2, 0);
    REQUIRE(s.size() == 6);
    CHECK(s[0].size() == 4);
    CHECK(s[2].size() == 2);
    CHECK(s[5].size() == 2);
    CHECK(epoch_boundaries(10, 4, 2) == std::vector<std::size_t>{0, 3});
    CHECK_THROWS_AS(minibatch_schedule(3, 4, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(minibatch_schedule(0, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("learning rates: simultaneous and alternating sequences")
{
    TrainingConfig c;
    auto sim = learning_rate_sequence(c, 3);
    for (auto [g, d] : sim) {
        CHECK(g == 1e-3);
        CHECK(d == 1e-3);
    }
    c.mode = UpdateMode::Alternating;
    auto alt = learning_rate_sequence(c, 4);
    CHECK(alt == std::vector<std::pair<double, double>>{{1e-3, 0}, {0, 1e-3}, {1e-3, 0}, {0, 1e-3}});
    c.generator_first = false;
    CHECK(learning_rate_sequence(c, 2) == std::vector<std::pair<double, double>>{{0, 1e-3}, {1e-3, 0}});
}

TEST_CASE("latents: bit-identical regeneration and standard moments")
{
    CHECK(regenerate_latents(77, 5, 10) == regenerate_latents(77, 5, 10));
    CHECK_FALSE(regenerate_latents(77, 5, 10) == regenerate_latents(78, 5, 10));
    auto v = standard_normals(5, 200001);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
    CHECK(derive_seed(1, SeedStream::Latents, 0) != derive_seed(1, SeedStream::Latents, 1));
    CHECK(derive_seed(1, SeedStream::Latents, 0) != derive_seed(1, SeedStream::Schedule, 0));
}

TEST_CASE("asgd step: zero rates, block masking, hand-computed first step")
{
    GanModel m(tiny_arch());
    auto theta = m.initialize(4).vector();
    Tensor data = gaussian_data(8, 2, 1);
    IndexBatch idx = {0, 1, 2, 3, 4, 5, 6, 7};
    auto batch = assemble_batch(data, idx, 5, 3);

    CHECK(asgd_step(m, theta, batch, 0.0, 0.0) == theta);
    auto only_g = asgd_step(m, theta, batch, 0.1, 0.0);
    for (std::size_t i = m.generator_size(); i < theta.size(); ++i) CHECK(only_g[i] == theta[i]);
    auto only_d = asgd_step(m, theta, batch, 0.0, 0.1);
    for (std::size_t i = 0; i < m.generator_size(); ++i) CHECK(only_d[i] == theta[i]);

    // Single-layer nets at theta = 0: D = 1/2 everywhere and G = 0, so the only
    // nonzero gradient entry is the D kernel, -mean(x)/2 (the fake term has
    // G(z) = 0 as its input). One step moves that kernel to eta * mean(x) / 2.
    GanArchitecture lin = tiny_arch();
    lin.gen_hidden = 0;
    lin.disc_hidden = 0;
    lin.gen_output_activation = Activation::Identity;
    GanModel ml(lin);
    std::vector<double> zero(ml.parameter_count(), 0.0);
    auto next = asgd_step(ml, zero, batch, 0.05, 0.05);
    const auto& k = ml.layout().find(Network::Discriminator, 0, ParamKind::Kernel);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < 8; ++r) mean += data(r, c) / 8.0;
        CHECK(next[k.offset + c] == doctest::Approx(0.05 * 0.5 * mean).epsilon(1e-14));
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (i != k.offset && i != k.offset + 1) CHECK(next[i] == 0.0);
    }
}

TEST_CASE("assemble batch: exclusion keeps the latent count")
{
    Tensor data = gaussian_data(6, 2, 2);
    IndexBatch idx = {5, 1, 3};
    std::unordered_set<std::uint32_t> ex = {1};
    auto b = assemble_batch(data, idx, 9, 4, &ex);
    CHECK(b.latents.rows() == 3);
    CHECK(b.latents.cols() == 4);
    REQUIRE(b.data.rows() == 2);
    CHECK(b.data(0, 0) == data(5, 0));
    CHECK(b.data(1, 1) == data(3, 1));
}

TEST_CASE("training: trivial configurations")
{
    Tensor data = gaussian_data(16, 2, 3);
    SUBCASE("zero step sizes keep every snapshot equal")
    {
        auto c = tiny_cfg();
        c.lr_generator = c.lr_discriminator = 0.0;
        auto tr = run_training(tiny_arch(), c, data, 1);
        for (const auto& r : tr.records) CHECK(r.theta == tr.records[0].theta);
        CHECK(tr.final_params == tr.records[0].theta);
    }
    SUBCASE("one epoch of one batch is one step")
    {
        auto c = tiny_cfg();
        c.epochs = 1;
        c.batch_size = 16;
        auto tr = run_training(tiny_arch(), c, data, 1);
        CHECK(tr.steps() == 1);
        CHECK(tr.window_start(1) == 0);
    }
    SUBCASE("record fields")
    {
        auto tr = run_training(tiny_arch(), tiny_cfg(), data, 1);
        CHECK(tr.steps() == 4);
        CHECK(tr.epoch_boundaries == std::vector<std::size_t>{0, 2});
        CHECK(tr.window_start(1) == 2);
        CHECK(tr.window_start(2) == 0);
        CHECK(tr.window_start(0) == 4);
        CHECK_THROWS_AS((void)tr.window_start(3), std::invalid_argument);
        for (std::size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.records[t].t == t);
            CHECK(tr.records[t].indices.size() == 8);
        }
        CHECK_NOTHROW(validate_trace(tr, data));
        CHECK_THROWS_AS(validate_trace(tr, gaussian_data(16, 2, 4)), TraceError);
    }
    CHECK_THROWS_AS(run_training(tiny_arch(), tiny_cfg(), Tensor({0, 2}, 0.0), 1), std::invalid_argument);
    CHECK_THROWS_AS(run_training(tiny_arch(), tiny_cfg(), gaussian_data(16, 3, 1), 1), ShapeError);
}

TEST_CASE("training: determinism, replay and snapshot consistency")
{
    Tensor data = gaussian_data(24, 2, 5);
    auto a = run_training(tiny_arch(), tiny_cfg(), data, 42);
    auto b = run_training(tiny_arch(), tiny_cfg(), data, 42);
    auto c = run_training(tiny_arch(), tiny_cfg(), data, 43);
    CHECK(a.records == b.records);
    CHECK(a.final_params == b.final_params);
    CHECK(trace_checksum(a) == trace_checksum(b));
    CHECK(trace_checksum(a) != trace_checksum(c));
    CHECK(a.fingerprint == c.fingerprint);

    CHECK(replay(a, data) == a.final_params);
    CHECK(replay(a, data, 3) == a.final_params);
    CHECK(replay(a, data, a.steps()) == a.final_params);
    GanModel m(a.architecture);
    for (std::size_t t = 0; t + 1 < a.steps(); ++t) {
        const auto& r = a.records[t];
        auto batch = assemble_batch(data, r.indices, r.z_seed, a.architecture.latent_dim);
        CHECK(asgd_step(m, r.theta, batch, r.lr_generator, r.lr_discriminator) == a.records[t + 1].theta);
    }
    // Excluding indices nobody used leaves the result unchanged.
    std::unordered_set<std::uint32_t> none = {1000, 2000};
    CHECK(replay(a, data, 0, none) == a.final_params);
}

TEST_CASE("training: alternating mode moves one block per step")
{
    Tensor data = gaussian_data(24, 2, 6);
    auto c = tiny_cfg();
    c.mode = UpdateMode::Alternating;
    auto tr = run_training(tiny_arch(), c, data, 3);
    GanModel m(tr.architecture);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
        const auto& r = tr.records[t];
        CHECK(((r.lr_generator == 0.0) != (r.lr_discriminator == 0.0)));
        const auto& next = t + 1 < tr.steps() ? tr.records[t + 1].theta : tr.final_params;
        const std::size_t lo = r.lr_generator == 0.0 ? 0 : m.generator_size();
        const std::size_t hi = r.lr_generator == 0.0 ? m.generator_size() : next.size();
        for (std::size_t i = lo; i < hi; ++i) CHECK(next[i] == r.theta[i]);
    }
}

TEST_CASE("training: divergence is reported")
{
    Tensor data = gaussian_data(16, 2, 7);
    auto c = tiny_cfg();
    c.lr_generator = c.lr_discriminator = 1e9;
    CHECK_THROWS_AS(run_training(tiny_arch(), c, data, 1), NumericalError);
}

TEST_CASE("training: desk configuration moves the discriminator and stays finite")
{
    auto v = standard_normals(11, 2000);
    std::vector<double> x(2000);
    for (std::size_t i = 0; i < 1000; ++i) {
        x[2 * i] = 1.0 + v[2 * i];
        x[2 * i + 1] = 1.0 + 0.8 * v[2 * i] + 0.6 * v[2 * i + 1];
    }
    Tensor data({1000, 2}, x);
    TrainingConfig cfg;
    auto tr = run_training(GanArchitecture{}, cfg, data, 7);
    CHECK(tr.steps() == 50);
    GanModel m(tr.architecture);
    auto mean_d = [&](const std::vector<double>& theta) {
        auto d = m.discriminate(theta, data);
        return std::accumulate(d.data().begin(), d.data().end(), 0.0) / 1000.0;
    };
    const double before = mean_d(tr.records[0].theta);
    const double after = mean_d(tr.final_params);
    CHECK(after != before);
    CHECK(after > 0.0);
    CHECK(after < 1.0);
    CHECK(std::all_of(tr.final_params.begin(), tr.final_params.end(), [](double p) { return std::isfinite(p); }));
}

TEST_CASE("trace io: binary records round trip bit-exactly")
{
    StepRecord r{3, {7, 1, 4294967295u}, 1e-3, 0.0, {1.5, -0.0, 1e-300, std::nextafter(1.0, 2.0)}, 0xfedcba9876543210ULL};
    auto back = decode_step(encode_step(r));
    CHECK(back == r);
    CHECK(std::signbit(back.theta[1]));
    auto bytes = encode_step(r);
    bytes.pop_back();
    CHECK_THROWS_AS(decode_step(bytes), TraceError);
    bytes = encode_step(r);
    bytes[0] = std::byte{'X'};
    CHECK_THROWS_AS(decode_step(bytes), TraceError);
    std::vector<double> p = {1.0, 2.0, -3.5};
    CHECK(decode_params(encode_params(p)) == p);
    // Little-endian layout of the header.
    auto enc = encode_params(p);
    CHECK(enc[8] == std::byte{3});
    CHECK(enc[9] == std::byte{0});
}

TEST_CASE("trace io: directory round trip and corruption detection")
{
    Tensor data = gaussian_data(24, 2, 8);
    auto tr = run_training(tiny_arch(), tiny_cfg(), data, 5);
    auto dir = scratch("trace");
    save_trace(tr, dir);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "step_000000.bin"));
    auto back = load_trace(dir);
    CHECK(back.records == tr.records);
    CHECK(back.final_params == tr.final_params);
    CHECK(back.fingerprint == tr.fingerprint);
    CHECK(back.epoch_boundaries == tr.epoch_boundaries);
    CHECK(back.architecture.canonical() == tr.architecture.canonical());
    CHECK(back.training.canonical() == tr.training.canonical());
    CHECK(trace_checksum(back) == trace_checksum(tr));
    CHECK(replay(back, data) == tr.final_params);

    {
        auto bytes = read_bytes(dir / "step_000002.bin");
        bytes[40] ^= std::byte{1};
        write_bytes(dir / "step_000002.bin", bytes);
    }
    CHECK_THROWS_AS(load_trace(dir), TraceError);
    fs::remove(dir / "step_000002.bin");
    CHECK_THROWS_AS(load_trace(dir), TraceError);
    CHECK_THROWS_AS(load_trace(scratch("missing")), TraceError);
    fs::remove_all(dir);
}

TEST_CASE("hashing: known SHA-256 vectors")
{
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    Tensor a({2, 1}, std::vector<double>{1.0, 2.0});
    Tensor b({1, 2}, std::vector<double>{1.0, 2.0});
    CHECK(tensor_checksum(a) != tensor_checksum(b));
    CHECK(tensor_checksum(a) == tensor_checksum(Tensor({2, 1}, std::vector<double>{1.0, 2.0})));
}
