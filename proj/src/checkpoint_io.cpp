#include "pfnbench/checkpoint_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pfnbench/errors.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {
namespace {

constexpr char kMagic[4] = {'P', 'F', 'N', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<unsigned char>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(out, bits);
}

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;

    void need(std::size_t k, const char* what) const {
        if (pos + k > n) throw CorruptionError(std::string("checkpoint truncated reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str(std::size_t len, const char* what) {
        need(len, what);
        std::string s(reinterpret_cast<const char*>(p + pos), len);
        pos += len;
        return s;
    }
};

std::vector<unsigned char> serialize(const Checkpoint& ckpt) {
    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kFormatVersion);
    const ModelConfig& c = ckpt.config();
    put_u32(out, static_cast<std::uint32_t>(c.d_model));
    put_u32(out, static_cast<std::uint32_t>(c.n_layers));
    put_u32(out, static_cast<std::uint32_t>(c.n_heads));
    put_u32(out, static_cast<std::uint32_t>(c.d_ff));
    put_u32(out, static_cast<std::uint32_t>(c.max_features));
    put_u32(out, static_cast<std::uint32_t>(c.max_classes));
    put_u32(out, static_cast<std::uint32_t>(c.max_train_tokens));
    put_u32(out, static_cast<std::uint32_t>(c.max_query_tokens));
    put_u64(out, ckpt.fingerprint.prior_hash);
    put_u64(out, ckpt.fingerprint.seed);
    put_u64(out, ckpt.fingerprint.steps);

    const auto& weights = ckpt.weights;
    std::uint32_t count = 0;
    weights.for_each([&](const std::string&, const GradPair<float>&) { ++count; });
    put_u32(out, count);
    weights.for_each([&](const std::string& name, const GradPair<float>& p) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(p.value.rows));
        put_u32(out, static_cast<std::uint32_t>(p.value.cols));
        for (float v : p.value.data) put_f32(out, v);
    });
    put_u64(out, fnv1a64(out.data(), out.size()));
    return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const std::vector<unsigned char> bytes = serialize(ckpt);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("save_checkpoint: cannot open " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("save_checkpoint: write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("save_checkpoint: cannot move " + tmp + " to " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw CorruptionError("load_checkpoint: file too short");

    const std::uint64_t stored = [&] {
        Reader tail{bytes.data(), bytes.size(), bytes.size() - 8};
        return tail.u64("checksum");
    }();
    const std::uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored != actual) {
        throw CorruptionError("load_checkpoint: checksum mismatch in " + path);
    }

    Reader r{bytes.data(), bytes.size() - 8};
    if (r.str(4, "magic") != std::string(kMagic, 4)) {
        throw CorruptionError("load_checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = r.u32("version");
    if (version != kFormatVersion) {
        throw CorruptionError("load_checkpoint: unsupported format version " +
                              std::to_string(version));
    }
    ModelConfig cfg;
    cfg.d_model = static_cast<int>(r.u32("d_model"));
    cfg.n_layers = static_cast<int>(r.u32("n_layers"));
    cfg.n_heads = static_cast<int>(r.u32("n_heads"));
    cfg.d_ff = static_cast<int>(r.u32("d_ff"));
    cfg.max_features = static_cast<int>(r.u32("max_features"));
    cfg.max_classes = static_cast<int>(r.u32("max_classes"));
    cfg.max_train_tokens = static_cast<int>(r.u32("max_train_tokens"));
    cfg.max_query_tokens = static_cast<int>(r.u32("max_query_tokens"));

    Checkpoint ckpt(cfg);
    ckpt.fingerprint.prior_hash = r.u64("prior_hash");
    ckpt.fingerprint.seed = r.u64("seed");
    ckpt.fingerprint.steps = r.u64("steps");

    const std::uint32_t count = r.u32("tensor count");
    std::size_t loaded = 0;
    ckpt.weights.for_each([&](const std::string& name, GradPair<float>& p) {
        const std::uint32_t name_len = r.u32("tensor name length");
        const std::string stored_name = r.str(name_len, "tensor name");
        if (stored_name != name) {
            throw CorruptionError("load_checkpoint: expected tensor '" + name + "', found '" +
                                  stored_name + "'");
        }
        const std::uint32_t rows = r.u32("tensor rows");
        const std::uint32_t cols = r.u32("tensor cols");
        if (rows != p.value.rows || cols != p.value.cols) {
            throw CorruptionError("load_checkpoint: tensor '" + name + "' has shape " +
                                  std::to_string(rows) + "x" + std::to_string(cols) +
                                  ", config implies " + std::to_string(p.value.rows) + "x" +
                                  std::to_string(p.value.cols));
        }
        for (auto& v : p.value.data) v = r.f32("tensor data");
        ++loaded;
    });
    if (loaded != count) {
        throw CorruptionError("load_checkpoint: tensor count mismatch");
    }
    return ckpt;
}

std::uint64_t checkpoint_digest(const Checkpoint& ckpt) {
    const std::vector<unsigned char> bytes = serialize(ckpt);
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace pfnbench
