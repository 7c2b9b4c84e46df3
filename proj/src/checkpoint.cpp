#include "eshift/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "eshift/errors.hpp"
#include "eshift/spec_json.hpp"

namespace eshift {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'H', 'I', 'F', 'T', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw DataError("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

Checkpoint capture_checkpoint(Network& net, const RngState& rng, std::int64_t epoch) {
    Checkpoint c;
    c.spec_json = network_spec_to_json(net.spec());
    c.rng_seed = rng.seed();
    c.rng_counter = rng.counter();
    c.epoch = epoch;
    for (Tensor* t : net.state_tensors()) {
        c.tensors.emplace_back(t->data(), t->data() + t->size());
    }
    return c;
}

void restore_into(Network& net, const Checkpoint& ckpt) {
    auto slots = net.state_tensors();
    if (slots.size() != ckpt.tensors.size()) {
        throw DataError("checkpoint does not match network (tensor count)");
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]->size() != ckpt.tensors[i].size()) {
            throw DataError("checkpoint does not match network (tensor size)");
        }
        std::memcpy(slots[i]->data(), ckpt.tensors[i].data(),
                    ckpt.tensors[i].size() * sizeof(double));
    }
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
    Network net = build_network(network_spec_from_json(ckpt.spec_json));
    restore_into(net, ckpt);
    return net;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, ckpt.version);
    put_u64(out, ckpt.spec_json.size());
    out.append(ckpt.spec_json);
    put_u64(out, ckpt.rng_seed);
    put_u64(out, ckpt.rng_counter);
    put_u64(out, static_cast<std::uint64_t>(ckpt.epoch));
    put_u64(out, ckpt.tensors.size());
    for (const auto& t : ckpt.tensors) {
        put_u64(out, t.size());
        for (double v : t) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write checkpoint: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw DataError("bad checkpoint magic");
    }
    Checkpoint c;
    c.version = r.u32();
    if (c.version != 1) throw DataError("unsupported checkpoint version");
    const std::size_t spec_len = r.u64();
    c.spec_json = r.bytes(spec_len);
    c.rng_seed = r.u64();
    c.rng_counter = r.u64();
    c.epoch = static_cast<std::int64_t>(r.u64());
    const std::size_t count = r.u64();
    c.tensors.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t len = r.u64();
        c.tensors[i].resize(len);
        for (std::size_t k = 0; k < len; ++k) {
            c.tensors[i][k] = std::bit_cast<double>(r.u64());
        }
    }
    if (r.pos != buf.size()) throw DataError("trailing bytes in checkpoint");
    return c;
}

}  // namespace eshift
