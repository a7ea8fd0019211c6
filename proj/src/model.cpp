#include "rtgn/model.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rtgn/binary_io.hpp"

namespace rtgn {

Model::Model(const encoder::EncoderConfig& config, encoder::HeadKind head)
    : params(config, head), center("center", 2 * config.embed_dim, 1, /*decay=*/false) {}

void Model::set_center(std::vector<double> c) {
    if (c.size() != center.size())
        throw std::invalid_argument("center has dimension " + std::to_string(c.size()) + ", expected " +
                                    std::to_string(center.size()));
    center.value = std::move(c);
    center_set = true;
}

std::vector<diff::Parameter*> Model::trainable() {
    auto ps = params.all();
    ps.push_back(&center);
    return ps;
}

Model make_model(const encoder::EncoderConfig& config, encoder::HeadKind head, std::uint64_t seed) {
    Model m(config, head);
    m.params.initialize(seed);
    return m;
}

namespace {

void write_block(std::ostream& os, const std::string& name, std::size_t rows, std::size_t cols,
                 std::span<const double> values) {
    io::write_string(os, name);
    io::write_u32(os, static_cast<std::uint32_t>(rows));
    io::write_u32(os, static_cast<std::uint32_t>(cols));
    for (double v : values) io::write_f64(os, v);
}

struct Block {
    std::string name;
    std::uint32_t rows = 0, cols = 0;
    std::vector<double> values;
};

Block read_block(std::istream& is) {
    Block b;
    b.name = io::read_string(is);
    b.rows = io::read_u32(is);
    b.cols = io::read_u32(is);
    const std::uint64_t n = static_cast<std::uint64_t>(b.rows) * b.cols;
    if (n > (1ull << 28)) throw io::FormatError("checkpoint block '" + b.name + "' is implausibly large");
    b.values.resize(n);
    for (double& v : b.values) v = io::read_f64(is);
    return b;
}

}  // namespace

void save_checkpoint(std::ostream& os, const Model& model) {
    const auto& c = model.params.config;
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    io::write_u32(os, kCheckpointVersion);
    for (std::size_t d : {c.memory_dim, c.time_dim, c.embed_dim, c.feature_dim, c.neighbors})
        io::write_u32(os, static_cast<std::uint32_t>(d));
    io::write_u32(os, static_cast<std::uint32_t>(c.hidden_dim));
    io::write_u32(os, static_cast<std::uint32_t>(model.params.head));
    io::write_f64(os, c.sigma_floor);
    io::write_f64(os, c.time_scale_decades);
    io::write_u32(os, c.memory_grad ? 1u : 0u);

    const auto ps = model.params.all();
    const std::size_t fd = model.scaler.mean.size();
    io::write_u32(os, static_cast<std::uint32_t>(ps.size() + 3));
    for (const diff::Parameter* p : ps) write_block(os, p->name, p->shape.rows, p->shape.cols, p->value);
    write_block(os, "center", model.center.size(), 1, model.center.value);
    write_block(os, "scaler.mean", fd, 1, model.scaler.mean);
    write_block(os, "scaler.std", fd, 1, model.scaler.std);
    io::write_string(os, model.config_echo);
    if (!os) throw std::runtime_error("failed writing checkpoint");
}

Model load_checkpoint(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw io::FormatError("not a checkpoint: bad magic");
    const auto version = io::read_u32(is);
    if (version != kCheckpointVersion)
        throw io::FormatError("unsupported checkpoint version " + std::to_string(version));
    encoder::EncoderConfig c;
    c.memory_dim = io::read_u32(is);
    c.time_dim = io::read_u32(is);
    c.embed_dim = io::read_u32(is);
    c.feature_dim = io::read_u32(is);
    c.neighbors = io::read_u32(is);
    c.hidden_dim = io::read_u32(is);
    const auto head = io::read_u32(is);
    if (head > 1) throw io::FormatError("unknown head code " + std::to_string(head));
    c.sigma_floor = io::read_f64(is);
    c.time_scale_decades = io::read_f64(is);
    c.memory_grad = io::read_u32(is) != 0;

    Model m(c, static_cast<encoder::HeadKind>(head));
    auto ps = m.params.all();
    const auto count = io::read_u32(is);
    if (count != ps.size() + 3)
        throw io::FormatError("checkpoint has " + std::to_string(count) + " blocks, expected " +
                              std::to_string(ps.size() + 3));
    auto expect = [](const Block& b, const std::string& name, std::size_t rows, std::size_t cols) {
        if (b.name != name || b.rows != rows || b.cols != cols)
            throw io::FormatError("checkpoint block '" + b.name + "' [" + std::to_string(b.rows) + "x" +
                                  std::to_string(b.cols) + "] where '" + name + "' [" + std::to_string(rows) +
                                  "x" + std::to_string(cols) + "] was expected");
    };
    for (diff::Parameter* p : ps) {
        Block b = read_block(is);
        expect(b, p->name, p->shape.rows, p->shape.cols);
        p->value = std::move(b.values);
    }
    Block center = read_block(is);
    expect(center, "center", m.center.size(), 1);
    m.set_center(std::move(center.values));
    Block mean = read_block(is);
    Block sd = read_block(is);
    expect(mean, "scaler.mean", mean.rows, 1);
    expect(sd, "scaler.std", mean.rows, 1);
    m.scaler.mean = std::move(mean.values);
    m.scaler.std = std::move(sd.values);
    m.config_echo = io::read_string(is);
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    save_checkpoint(os, model);
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error(path.string() + ": cannot open checkpoint");
    return load_checkpoint(is);
}

}  // namespace rtgn
