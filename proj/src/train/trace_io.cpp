#include "ganinf/train/trace_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ganinf/errors.hpp"
#include "ganinf/train/hashing.hpp"

namespace ganinf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kStepMagic[9] = "GISTEP01";
constexpr char kParamMagic[9] = "GIPARAM1";

class Writer {
public:
    void magic(const char* m)
    {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::byte>(m[i]));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::byte>(v >> (8 * i)));
    }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::byte>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::byte> take() { return std::move(out_); }

private:
    std::vector<std::byte> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> in) : in_(in) {}

    void magic(const char* m)
    {
        need(8);
        if (std::memcmp(in_.data() + pos_, m, 8) != 0) throw TraceError(std::string("bad record magic, expected ") + m);
        pos_ += 8;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::to_integer<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void finish() const
    {
        if (pos_ != in_.size()) throw TraceError("trailing bytes after record");
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > in_.size()) throw TraceError("truncated record");
    }
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

std::string step_file(std::size_t t)
{
    std::ostringstream s;
    s << "step_" << std::setw(6) << std::setfill('0') << t << ".bin";
    return s.str();
}

}  // namespace

std::vector<std::byte> encode_step(const StepRecord& rec)
{
    Writer w;
    w.magic(kStepMagic);
    w.u64(rec.t);
    w.u64(rec.theta.size());
    w.u64(rec.indices.size());
    w.f64(rec.lr_generator);
    w.f64(rec.lr_discriminator);
    w.u64(rec.z_seed);
    for (double v : rec.theta) w.f64(v);
    for (auto i : rec.indices) w.u32(i);
    return w.take();
}

StepRecord decode_step(std::span<const std::byte> bytes)
{
    Reader r(bytes);
    r.magic(kStepMagic);
    StepRecord rec;
    rec.t = r.u64();
    const auto d = r.u64();
    const auto n = r.u64();
    rec.lr_generator = r.f64();
    rec.lr_discriminator = r.f64();
    rec.z_seed = r.u64();
    if (r.remaining() != d * 8 + n * 4) throw TraceError("step record length does not match its header");
    rec.theta.resize(d);
    for (auto& v : rec.theta) v = r.f64();
    rec.indices.resize(n);
    for (auto& i : rec.indices) i = r.u32();
    r.finish();
    return rec;
}

std::vector<std::byte> encode_params(std::span<const double> values)
{
    Writer w;
    w.magic(kParamMagic);
    w.u64(values.size());
    for (double v : values) w.f64(v);
    return w.take();
}

std::vector<double> decode_params(std::span<const std::byte> bytes)
{
    Reader r(bytes);
    r.magic(kParamMagic);
    const auto d = r.u64();
    if (r.remaining() != d * 8) throw TraceError("parameter file length does not match its header");
    std::vector<double> out(d);
    for (auto& v : out) v = r.f64();
    r.finish();
    return out;
}

void write_bytes(const fs::path& file, std::span<const std::byte> bytes)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write to " + file.string() + " failed");
}

std::vector<std::byte> read_bytes(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw TraceError("cannot open " + file.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> out(size);
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
    if (!in) throw TraceError("read from " + file.string() + " failed");
    return out;
}

void save_params(const fs::path& file, std::span<const double> values) { write_bytes(file, encode_params(values)); }

std::vector<double> load_params(const fs::path& file) { return decode_params(read_bytes(file)); }

std::string trace_checksum(const TrainingTrace& trace)
{
    Sha256 h;
    for (const auto& rec : trace.records) h.update(encode_step(rec));
    h.update(encode_params(trace.final_params));
    return h.hex_digest();
}

json to_json(const GanArchitecture& a)
{
    return {{"latent_dim", a.latent_dim},
            {"data_dim", a.data_dim},
            {"gen_hidden", a.gen_hidden},
            {"disc_hidden", a.disc_hidden},
            {"gen_hidden_activation", to_string(a.gen_hidden_activation)},
            {"gen_output_activation", to_string(a.gen_output_activation)},
            {"disc_hidden_activation", to_string(a.disc_hidden_activation)},
            {"l2_rate", a.l2_rate},
            {"objective", to_string(a.objective)}};
}

GanArchitecture architecture_from_json(const json& j)
{
    GanArchitecture a;
    a.latent_dim = j.at("latent_dim").get<std::size_t>();
    a.data_dim = j.at("data_dim").get<std::size_t>();
    a.gen_hidden = j.at("gen_hidden").get<std::size_t>();
    a.disc_hidden = j.at("disc_hidden").get<std::size_t>();
    a.gen_hidden_activation = parse_activation(j.at("gen_hidden_activation").get<std::string>());
    a.gen_output_activation = parse_activation(j.at("gen_output_activation").get<std::string>());
    a.disc_hidden_activation = parse_activation(j.at("disc_hidden_activation").get<std::string>());
    a.l2_rate = j.at("l2_rate").get<double>();
    a.objective = parse_objective(j.at("objective").get<std::string>());
    return a;
}

json to_json(const TrainingConfig& c)
{
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr_generator", c.lr_generator},
            {"lr_discriminator", c.lr_discriminator},
            {"mode", to_string(c.mode)},
            {"generator_first", c.generator_first}};
}

TrainingConfig training_from_json(const json& j)
{
    TrainingConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lr_generator = j.at("lr_generator").get<double>();
    c.lr_discriminator = j.at("lr_discriminator").get<double>();
    c.mode = parse_update_mode(j.at("mode").get<std::string>());
    c.generator_first = j.at("generator_first").get<bool>();
    return c;
}

void save_trace(const TrainingTrace& trace, const fs::path& dir)
{
    fs::create_directories(dir);
    Sha256 h;
    for (const auto& rec : trace.records) {
        auto bytes = encode_step(rec);
        h.update(bytes);
        write_bytes(dir / step_file(rec.t), bytes);
    }
    auto fin = encode_params(trace.final_params);
    h.update(fin);
    write_bytes(dir / "final.bin", fin);

    GanModel model(trace.architecture);
    json m = {{"format", "ganinf-trace"},
              {"version", kTraceFormatVersion},
              {"fingerprint", trace.fingerprint},
              {"seed", trace.seed},
              {"N", trace.dataset_size},
              {"K", trace.epochs()},
              {"T", trace.steps() + 1},
              {"d_G", model.generator_size()},
              {"d_D", model.discriminator_size()},
              {"epoch_boundaries", trace.epoch_boundaries},
              {"architecture", to_json(trace.architecture)},
              {"training", to_json(trace.training)},
              {"dataset_checksum", trace.dataset_checksum},
              {"trace_checksum", h.hex_digest()}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

TrainingTrace load_trace(const fs::path& dir)
{
    std::ifstream in(dir / "manifest.json");
    if (!in) throw TraceError("no manifest.json in " + dir.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw TraceError(std::string("unreadable trace manifest: ") + e.what());
    }
    try {
        if (m.at("format") != "ganinf-trace") throw TraceError("not a trace manifest");
        if (m.at("version").get<int>() != kTraceFormatVersion) {
            throw TraceError("unsupported trace format version " + m.at("version").dump());
        }
        TrainingTrace trace;
        trace.architecture = architecture_from_json(m.at("architecture"));
        trace.training = training_from_json(m.at("training"));
        trace.seed = m.at("seed").get<std::uint64_t>();
        trace.dataset_size = m.at("N").get<std::size_t>();
        trace.dataset_checksum = m.at("dataset_checksum").get<std::string>();
        trace.fingerprint = m.at("fingerprint").get<std::string>();
        trace.epoch_boundaries = m.at("epoch_boundaries").get<std::vector<std::size_t>>();
        const auto steps = m.at("T").get<std::size_t>() - 1;

        if (config_fingerprint(trace.architecture, trace.training, trace.dataset_checksum) != trace.fingerprint) {
            throw TraceError("manifest fingerprint does not match its own configuration");
        }
        GanModel model(trace.architecture);
        if (m.at("d_G").get<std::size_t>() != model.generator_size() ||
            m.at("d_D").get<std::size_t>() != model.discriminator_size()) {
            throw TraceError("manifest parameter sizes do not match the architecture");
        }

        Sha256 h;
        trace.records.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            auto bytes = read_bytes(dir / step_file(t));
            h.update(bytes);
            auto rec = decode_step(bytes);
            if (rec.t != t) throw TraceError(step_file(t) + " holds step " + std::to_string(rec.t));
            if (rec.theta.size() != model.parameter_count()) throw TraceError(step_file(t) + " has the wrong parameter count");
            trace.records.push_back(std::move(rec));
        }
        auto fin = read_bytes(dir / "final.bin");
        h.update(fin);
        trace.final_params = decode_params(fin);
        if (h.hex_digest() != m.at("trace_checksum").get<std::string>()) {
            throw TraceError("trace checksum mismatch; records were modified or corrupted");
        }
        return trace;
    } catch (const json::exception& e) {
        throw TraceError(std::string("malformed trace manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw TraceError(std::string("malformed trace manifest: ") + e.what());
    }
}

}  // namespace ganinf
