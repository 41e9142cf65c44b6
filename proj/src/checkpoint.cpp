#include "ers/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ers::pipeline {

namespace {

constexpr char kMagic[8] = "ERSCKPT";  // 7 chars + NUL, NUL not written
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

// ---- writer ----

struct Writer {
    std::string& out;

    void bytes(const void* p, std::size_t n) {
        out.append(static_cast<const char*>(p), n);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void tensor(const Tensor& t) {
        u32(static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) u64(d);
        u64(t.values.size());
        bytes(t.values.data(), t.values.size() * sizeof(double));
    }
    void layer(const model::DenseLayer& l) {
        tensor(l.weight);
        tensor(l.bias);
    }
};

// ---- reader ----

struct Reader {
    const std::string& in;
    const std::string& origin;
    std::size_t pos = 0;

    void bytes(void* p, std::size_t n) {
        if (pos + n > in.size())
            throw IoError("checkpoint '" + origin + "': truncated file");
        std::memcpy(p, in.data() + pos, n);
        pos += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    Tensor tensor() {
        const std::uint32_t rank = u32();
        if (rank > 2)
            throw IoError("checkpoint '" + origin + "': bad tensor rank");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = u64();
        const std::uint64_t count = u64();
        if (count != shape_product(shape))
            throw IoError("checkpoint '" + origin + "': bad tensor manifest");
        std::vector<double> values(count);
        bytes(values.data(), count * sizeof(double));
        return Tensor(std::move(shape), std::move(values));
    }
    model::DenseLayer layer() {
        Tensor w = tensor();
        Tensor b = tensor();
        return model::DenseLayer{std::move(w), std::move(b)};
    }
};

}  // namespace

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::pretext: return "pretext";
        case Stage::scan: return "scan";
        case Stage::selflabel: return "selflabel";
    }
    throw DomainError("unknown stage");
}

Stage stage_from_name(const std::string& name) {
    if (name == "pretext") return Stage::pretext;
    if (name == "scan") return Stage::scan;
    if (name == "selflabel") return Stage::selflabel;
    throw DomainError("unknown stage name '" + name + "'");
}

std::string serialize_checkpoint(const Checkpoint& c) {
    std::string out;
    Writer w{out};
    w.bytes(kMagic, 7);
    w.u32(kVersion);
    w.u64(c.config_digest);
    w.u64(c.dataset_digest);
    w.u32(c.member_id);
    w.str(stage_name(c.stage));
    w.f64(c.lambdas.lambda0);
    w.f64(c.lambdas.lambda1);
    w.f64(c.lambdas.lambda2);
    w.f64(c.lambdas.lambda3);
    w.u32(static_cast<std::uint32_t>(c.final_terms.size()));
    for (const TermValue& t : c.final_terms) {
        w.str(t.name);
        w.f64(t.value);
    }
    w.u32(static_cast<std::uint32_t>(c.encoder.hidden.size()));
    for (const model::DenseLayer& l : c.encoder.hidden) w.layer(l);
    w.layer(c.encoder.out);
    w.u8(c.has_head ? 1 : 0);
    if (c.has_head) w.layer(c.head.linear);
    w.u64(fnv1a64(out.data(), out.size()));
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::string& origin) {
    if (bytes.size() < 7 + 4 + 8)
        throw IoError("checkpoint '" + origin + "': truncated file");
    if (std::memcmp(bytes.data(), kMagic, 7) != 0)
        throw IoError("checkpoint '" + origin + "': not a checkpoint file");
    Reader header{bytes, origin, 7};
    const std::uint32_t version = header.u32();
    if (version != kVersion)
        throw IoError("checkpoint '" + origin + "': version mismatch (file " +
                      std::to_string(version) + ", supported " +
                      std::to_string(kVersion) + ")");
    // Trailing digest covers everything before it.
    const std::size_t body_len = bytes.size() - 8;
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body_len, 8);
    if (fnv1a64(bytes.data(), body_len) != stored)
        throw IoError("checkpoint '" + origin +
                      "': digest mismatch (corrupt file)");

    Reader r{bytes, origin, header.pos};
    Checkpoint c;
    c.config_digest = r.u64();
    c.dataset_digest = r.u64();
    c.member_id = r.u32();
    c.stage = stage_from_name(r.str());
    c.lambdas.lambda0 = r.f64();
    c.lambdas.lambda1 = r.f64();
    c.lambdas.lambda2 = r.f64();
    c.lambdas.lambda3 = r.f64();
    const std::uint32_t n_terms = r.u32();
    for (std::uint32_t i = 0; i < n_terms; ++i) {
        TermValue t;
        t.name = r.str();
        t.value = r.f64();
        c.final_terms.push_back(std::move(t));
    }
    const std::uint32_t n_hidden = r.u32();
    for (std::uint32_t i = 0; i < n_hidden; ++i)
        c.encoder.hidden.push_back(r.layer());
    c.encoder.out = r.layer();
    c.has_head = r.u8() != 0;
    if (c.has_head) c.head.linear = r.layer();
    if (r.pos != body_len)
        throw IoError("checkpoint '" + origin + "': trailing bytes");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open '" + path + "'");
    const std::string bytes = serialize_checkpoint(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes, path);
}

}  // namespace ers::pipeline
